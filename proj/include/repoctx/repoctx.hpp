#pragma once

#include "repoctx/bm25.hpp"
#include "repoctx/cache.hpp"
#include "repoctx/chunker.hpp"
#include "repoctx/config.hpp"
#include "repoctx/dense.hpp"
#include "repoctx/engine.hpp"
#include "repoctx/fixture_analyzer.hpp"
#include "repoctx/fusion.hpp"
#include "repoctx/generation.hpp"
#include "repoctx/harness.hpp"
#include "repoctx/http_clients.hpp"
#include "repoctx/language_profile.hpp"
#include "repoctx/lsp_client.hpp"
#include "repoctx/metrics.hpp"
#include "repoctx/postprocess.hpp"
#include "repoctx/prompt.hpp"
#include "repoctx/task.hpp"
#include "repoctx/type_context.hpp"
#include "repoctx/verify.hpp"
#include "repoctx/workspace.hpp"
