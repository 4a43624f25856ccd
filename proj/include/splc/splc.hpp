#pragma once

#include "chain_bounds.hpp"
#include "gadget_lab.hpp"
#include "lemmas.hpp"
#include "lemmas_json.hpp"
#include "market.hpp"
#include "market_json.hpp"
#include "purecircuit.hpp"
#include "rational.hpp"
#include "reduction.hpp"
#include "reduction_json.hpp"
#include "solver.hpp"
