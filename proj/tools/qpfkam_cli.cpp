// Batch front end: reads an experiment config, runs it, writes artifacts.
#include "qpfkam/error.hpp"
#include "qpfkam/runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

int main(int argc, char** argv) {
    CLI::App app{"qpfkam: KAM reducibility experiments for quasiperiodically forced circle flows"};
    std::string config_path, out_dir, mode;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_degree, threads;
    app.add_option("--config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--seed", seed, "random seed (overrides the config)");
    app.add_option("--mode", mode, "paper or engineering")->check(CLI::IsMember({"paper", "engineering"}));
    app.add_option("--max-degree", max_degree, "truncation cap in engineering mode")->check(CLI::Range(1, 512));
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    try {
        qpfkam::Json j = qpfkam::read_json_file(config_path);
        if (!j.is_object()) throw qpfkam::Error("cli", qpfkam::Errc::config_invalid, "configuration must be an object");
        if (!out_dir.empty()) j["output"] = out_dir;
        if (seed) j["seed"] = *seed;
        if (!mode.empty()) j["mode"] = mode;
        if (max_degree) j["max_degree"] = *max_degree;
        if (threads) j["threads"] = *threads;
        const auto base = std::filesystem::path(config_path).parent_path();
        const qpfkam::ExperimentConfig cfg = qpfkam::parse_config(j, base.empty() ? "." : base.string());
        const qpfkam::RunOutcome out = qpfkam::run_experiment(cfg);
        if (!cfg.output.empty()) qpfkam::write_artifacts(cfg, out);
        std::cout << cfg.run << ": status " << out.exit_status;
        if (!out.error.empty()) std::cout << " (" << out.error << ")";
        std::cout << '\n';
        if (cfg.output.empty()) std::cout << out.result.dump(2) << '\n';
        if (out.result.contains("error") && out.result["error"].contains("detail"))
            std::cerr << out.result["error"]["detail"].get<std::string>() << '\n';
        return out.exit_status;
    } catch (const qpfkam::Error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
}
