#pragma once

// Difference-based residual variance estimation for nonparametric regression:
// estimators, exact quadratic-form analytics, and a seeded simulation harness.

#include "varfit/analytics.hpp"
#include "varfit/banded.hpp"
#include "varfit/estimators.hpp"
#include "varfit/io.hpp"
#include "varfit/numeric.hpp"
#include "varfit/quadratic_forms.hpp"
#include "varfit/simulation.hpp"
#include "varfit/types.hpp"
