#pragma once

#include "cubal/binary_op.hpp"
#include "cubal/cubic_matrix.hpp"
#include "cubal/errors.hpp"
#include "cubal/expr.hpp"
#include "cubal/flows.hpp"
#include "cubal/group_table.hpp"
#include "cubal/io.hpp"
#include "cubal/mul_rule.hpp"
#include "cubal/verify.hpp"
