#pragma once

#include "lingad/corpus.hpp"
#include "lingad/corruptor.hpp"
#include "lingad/detectors/abod.hpp"
#include "lingad/detectors/classifier.hpp"
#include "lingad/detectors/gmm.hpp"
#include "lingad/detectors/iforest.hpp"
#include "lingad/detectors/importance.hpp"
#include "lingad/detectors/kde.hpp"
#include "lingad/detectors/outlier_model.hpp"
#include "lingad/detectors/threshold.hpp"
#include "lingad/edit_analysis.hpp"
#include "lingad/error.hpp"
#include "lingad/eval.hpp"
#include "lingad/hypothesis.hpp"
#include "lingad/interchange.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/log.hpp"
#include "lingad/metrics.hpp"
#include "lingad/ngram_lm.hpp"
#include "lingad/parallel.hpp"
#include "lingad/rng.hpp"
#include "lingad/stats.hpp"
#include "lingad/token_metrics.hpp"
#include "lingad/utf8.hpp"
#include "lingad/version.hpp"
