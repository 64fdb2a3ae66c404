#pragma once

#include "bitvec.hpp"
#include "corpus.hpp"
#include "driver.hpp"
#include "enumerator.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "problem.hpp"
#include "sexpr.hpp"
#include "solver.hpp"
#include "unifier.hpp"
