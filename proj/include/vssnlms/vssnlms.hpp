#pragma once

#include "errors.hpp"
#include "op_count.hpp"
#include "wav.hpp"
#include "signal.hpp"
#include "filter_core.hpp"
#include "vss_control.hpp"
#include "theory.hpp"
#include "sim_harness.hpp"
#include "trace_csv.hpp"
#include "cli.hpp"
