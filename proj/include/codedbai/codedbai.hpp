#pragma once

#include "codedbai/attackers.hpp"
#include "codedbai/baselines.hpp"
#include "codedbai/design.hpp"
#include "codedbai/environment.hpp"
#include "codedbai/errors.hpp"
#include "codedbai/harness.hpp"
#include "codedbai/instance.hpp"
#include "codedbai/io.hpp"
#include "codedbai/rng.hpp"
#include "codedbai/secure.hpp"
#include "codedbai/stats.hpp"
