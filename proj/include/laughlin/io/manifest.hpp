#pragma once

#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "laughlin/io/json_io.hpp"

namespace laughlin::io {

inline constexpr const char* kVersion = "0.1.0";

inline json versions() {
    return {{"laughlin_lab", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"cli11", CLI11_VERSION},
#if defined(__VERSION__)
            {"compiler", __VERSION__}
#else
            {"compiler", "unknown"}
#endif
    };
}

/// One per run. `config` is the fully resolved parameter set, so passing the
/// manifest back through --config repeats the run.
struct RunManifest {
    std::string subcommand;
    json config = json::object();
    std::uint64_t seed = 0;
    std::string primary_output;
    std::vector<std::string> outputs;
    double wall_time = 0.0;
    std::size_t threads = 1;
    int exit_code = 0;

    std::string config_hash() const { return hex64(fnv1a64(config.dump())); }

    json to_json() const {
        return {{"subcommand", subcommand},
                {"config", config},
                {"config_hash", config_hash()},
                {"seed", seed},
                {"versions", versions()},
                {"wall_time_seconds", wall_time},
                {"threads", threads},
                {"exit_code", exit_code},
                {"primary_output", primary_output},
                {"outputs", outputs}};
    }

    static bool looks_like_manifest(const json& j) {
        return j.is_object() && j.contains("subcommand") && j.contains("config") && j.contains("config_hash");
    }
};

inline std::string manifest_name(const std::string& subcommand) { return subcommand + ".manifest.json"; }

}  // namespace laughlin::io
