#pragma once

#include "magtrace/core.hpp"
#include "magtrace/quadrature.hpp"
#include "magtrace/polynomial.hpp"
#include "magtrace/field.hpp"
#include "magtrace/function.hpp"
#include "magtrace/potential.hpp"
#include "magtrace/discretization.hpp"
#include "magtrace/norms.hpp"
#include "magtrace/trace_extension.hpp"
#include "magtrace/inequality_lab.hpp"
#include "magtrace/pullback.hpp"
#include "magtrace/harness.hpp"
