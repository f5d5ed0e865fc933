#pragma once

// Expression parsing, symbolic differentiation and Cartan calculus on a chart.

#include "tgm/cartan.hpp"
#include "tgm/chart.hpp"
#include "tgm/expr.hpp"
#include "tgm/tensor.hpp"
#include "tgm/simplify.hpp"
