#pragma once

#include "jubensha/llm/mock_backend.hpp"

namespace jubensha::agent {

// Deterministic stand-ins for every agent prompt tag, driven by the request
// bindings. Answers are stitched from the speaker's own script with an
// occasional invented detail, so verification has something to reject.
void install_offline_responders(llm::MockBackend& backend);

// "```json" fenced object with the given keys and values.
std::string fenced_json(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace jubensha::agent
