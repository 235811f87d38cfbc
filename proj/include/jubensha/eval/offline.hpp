#pragma once

#include "jubensha/llm/mock_backend.hpp"

namespace jubensha::eval {

// Deterministic stand-ins for the QA generation, answering and judging tags.
void install_offline_eval_responders(llm::MockBackend& backend);

}  // namespace jubensha::eval
