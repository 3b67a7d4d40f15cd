#pragma once

#include "auditchain/bench.hpp"
#include "auditchain/bytes.hpp"
#include "auditchain/digest.hpp"
#include "auditchain/errors.hpp"
#include "auditchain/kvstore.hpp"
#include "auditchain/ledger.hpp"
#include "auditchain/local_backend.hpp"
#include "auditchain/log_model.hpp"
#include "auditchain/net_sim.hpp"
#include "auditchain/oracle.hpp"
#include "auditchain/query.hpp"
#include "auditchain/query_engine.hpp"
#include "auditchain/streams.hpp"
