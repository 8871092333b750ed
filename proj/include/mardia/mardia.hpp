#pragma once

#include "mardia/csv.hpp"
#include "mardia/data_gen.hpp"
#include "mardia/error.hpp"
#include "mardia/gof.hpp"
#include "mardia/mc_harness.hpp"
#include "mardia/moment_oracle.hpp"
#include "mardia/normal.hpp"
#include "mardia/null_moments.hpp"
#include "mardia/parallel.hpp"
#include "mardia/stats_core.hpp"
#include "mardia/test_engine.hpp"
#include "mardia/verify.hpp"
#include "mardia/version.hpp"
