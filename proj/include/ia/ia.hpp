#pragma once

// Convenience include-everything header.

#include "ia/core.hpp"
#include "ia/feasibility.hpp"
#include "ia/schubert.hpp"
#include "ia/verify.hpp"
#include "ia/construct3.hpp"
#include "ia/numsolve.hpp"
#include "ia/json_io.hpp"
