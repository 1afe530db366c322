#pragma once

#include "repchain/bytes.hpp"
#include "repchain/checks.hpp"
#include "repchain/config.hpp"
#include "repchain/consensus.hpp"
#include "repchain/crypto.hpp"
#include "repchain/fuzz.hpp"
#include "repchain/metrics.hpp"
#include "repchain/nodes.hpp"
#include "repchain/oracle.hpp"
#include "repchain/replay.hpp"
#include "repchain/reputation.hpp"
#include "repchain/rng.hpp"
#include "repchain/simulation.hpp"
#include "repchain/types.hpp"
