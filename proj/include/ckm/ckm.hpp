#pragma once

#include "ckm/assignment.hpp"
#include "ckm/candidate_tree.hpp"
#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/io.hpp"
#include "ckm/kmedian.hpp"
#include "ckm/list_kmeans.hpp"
#include "ckm/lowerbound.hpp"
#include "ckm/min_cost_flow.hpp"
#include "ckm/oracle.hpp"
#include "ckm/parallel.hpp"
#include "ckm/partition.hpp"
#include "ckm/rng.hpp"
#include "ckm/sampling.hpp"
#include "ckm/stats.hpp"
#include "ckm/subsets.hpp"
