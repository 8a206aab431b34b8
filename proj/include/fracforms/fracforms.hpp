#pragma once

#include "analysis.hpp"
#include "coords.hpp"
#include "errors.hpp"
#include "expr.hpp"
#include "forms.hpp"
#include "matrix.hpp"
#include "oracle.hpp"
#include "rl.hpp"
#include "special_functions.hpp"
