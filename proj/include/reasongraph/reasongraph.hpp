#pragma once
// Umbrella header.

#include "reasongraph/clustering.hpp"
#include "reasongraph/config.hpp"
#include "reasongraph/embedding.hpp"
#include "reasongraph/errors.hpp"
#include "reasongraph/estimator.hpp"
#include "reasongraph/gateway.hpp"
#include "reasongraph/graph.hpp"
#include "reasongraph/metrics.hpp"
#include "reasongraph/mock_backend.hpp"
#include "reasongraph/oracle.hpp"
#include "reasongraph/pipeline.hpp"
#include "reasongraph/prompts.hpp"
#include "reasongraph/report.hpp"
#include "reasongraph/trace.hpp"
#include "reasongraph/util.hpp"
