// Copyright 2026 The ltfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ltfl/config.hpp"
#include "ltfl/data.hpp"
#include "ltfl/domain.hpp"
#include "ltfl/error.hpp"
#include "ltfl/learner.hpp"
#include "ltfl/report.hpp"
#include "ltfl/resources.hpp"
#include "ltfl/rng.hpp"
#include "ltfl/scheduler.hpp"
#include "ltfl/simulation.hpp"
#include "ltfl/strategies.hpp"
#include "ltfl/timing.hpp"
