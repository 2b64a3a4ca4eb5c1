#pragma once

#include "mms/assess.hpp"
#include "mms/error.hpp"
#include "mms/evaluator.hpp"
#include "mms/exact.hpp"
#include "mms/fixed_point.hpp"
#include "mms/greedy.hpp"
#include "mms/harness.hpp"
#include "mms/instance.hpp"
#include "mms/lp.hpp"
#include "mms/parallel.hpp"
#include "mms/rng.hpp"
#include "mms/scenario.hpp"
#include "mms/sequence.hpp"
#include "mms/tabu.hpp"
