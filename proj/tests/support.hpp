#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "jubensha/agent/offline.hpp"
#include "jubensha/eval/offline.hpp"
#include "jubensha/fsutil.hpp"
#include "jubensha/llm/gateway.hpp"
#include "jubensha/llm/mock_backend.hpp"
#include "jubensha/script/script_pack.hpp"

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(JUBENSHA_SOURCE_DIR) / rel;
}

inline const jubensha::script::ScriptPack& greywater() {
    static const auto pack = jubensha::script::load_script_pack(source_path("fixtures/packs/greywater.pack.json"));
    return pack;
}

inline jubensha::llm::PriceTable fixture_prices() {
    return jubensha::llm::PriceTable::from_json_text(
        jubensha::read_text_file(source_path("fixtures/pricing.json")));
}

struct MockRig {
    std::shared_ptr<jubensha::llm::MockBackend> backend;
    std::unique_ptr<jubensha::llm::Gateway> gateway;
};

inline MockRig mock_rig(std::uint64_t seed = 0, bool offline = true, jubensha::llm::GatewayOptions options = {},
                        jubensha::llm::PriceTable prices = {}) {
    MockRig rig;
    rig.backend = std::make_shared<jubensha::llm::MockBackend>(seed);
    if (offline) {
        jubensha::agent::install_offline_responders(*rig.backend);
        jubensha::eval::install_offline_eval_responders(*rig.backend);
    }
    options.sleeper = [](std::chrono::milliseconds) {};
    rig.gateway = std::make_unique<jubensha::llm::Gateway>(rig.backend, options, std::move(prices));
    return rig;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("jubensha-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
