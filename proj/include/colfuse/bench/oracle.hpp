#pragma once

// Naive row-at-a-time evaluation of the canned queries over raw generated
// rows. Shares only the query constants with the engine.

#include <string>

#include "colfuse/bench/generator.hpp"
#include "colfuse/bench/queries.hpp"
#include "colfuse/exec/plan.hpp"

namespace colfuse {

QueryResult oracle_eval(const std::string& id, const Database& db, const QueryParams& params = {});

}  // namespace colfuse
