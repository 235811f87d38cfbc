#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jubensha/llm/gateway.hpp"

namespace jubensha::llm {

using Entries = std::vector<std::pair<std::string, std::string>>;

// Content of the first ``` fenced block, language tag line removed.
std::optional<std::string> first_fenced_block(std::string_view text);

// Accepts JSON plus Python literal habits: single quotes, True/False/None, trailing commas,
// full-width separators, bare keys and "......" placeholders. Trailing text after the value is ignored.
nlohmann::ordered_json parse_jsonish(std::string_view text);

// First object anywhere in the response (fenced block first), flattened to text values.
Entries parse_structured_entries(std::string_view response_text);

std::map<std::string, std::string> parse_structured(std::string_view response_text,
                                                    const std::vector<std::string>& expected_keys);

struct TaggedAnswer {
    std::string text;
    bool fallback = false;
};

TaggedAnswer extract_tagged_answer(std::string_view response_text, std::string_view tag);

// One item per line, or a list literal; bullets and numbering stripped, blanks dropped.
std::vector<std::string> parse_item_list(std::string_view response_text);

std::string json_value_to_text(const nlohmann::ordered_json& value);

struct StructuredReply {
    Entries entries;
    std::string raw_text;
    int calls = 0;
};

// One chat plus at most one re-ask with `retry_instruction` appended when the reply has no
// parsable object or lacks a required key.
StructuredReply chat_structured(Gateway& gateway, ChatRequest request,
                                const std::vector<std::string>& required_keys,
                                std::string_view retry_instruction);

std::optional<std::string> find_entry(const Entries& entries, std::string_view key);

}  // namespace jubensha::llm
