#pragma once

#include "qlrap/core.hpp"
#include "qlrap/errors.hpp"
#include "qlrap/io.hpp"
#include "qlrap/oracle.hpp"
#include "qlrap/random.hpp"
#include "qlrap/solver.hpp"
#include "qlrap/variational.hpp"
#include "qlrap/verify.hpp"
