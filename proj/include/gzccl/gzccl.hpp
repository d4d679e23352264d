// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "codec.hpp"
#include "collectives.hpp"
#include "commands.hpp"
#include "cost_model.hpp"
#include "dataset.hpp"
#include "metrics.hpp"
#include "runner.hpp"
#include "simnet.hpp"
