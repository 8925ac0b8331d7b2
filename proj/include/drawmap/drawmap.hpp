#pragma once
// Everything except the HTTP pieces, which pull in httplib.

#include "drawmap/assignment.hpp"
#include "drawmap/callout_grammar.hpp"
#include "drawmap/clock.hpp"
#include "drawmap/core.hpp"
#include "drawmap/corpus.hpp"
#include "drawmap/enricher.hpp"
#include "drawmap/escalation.hpp"
#include "drawmap/evaluation.hpp"
#include "drawmap/metrics.hpp"
#include "drawmap/pipeline.hpp"
#include "drawmap/resolver.hpp"
#include "drawmap/run_config.hpp"
#include "drawmap/review_service.hpp"
#include "drawmap/scoring.hpp"
#include "drawmap/serialization.hpp"
#include "drawmap/spec_emitter.hpp"
#include "drawmap/transport.hpp"
