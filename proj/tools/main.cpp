#include "misi/commands.hpp"
#include "misi/error.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <omp.h>
#include <unistd.h>

namespace {

// Writes through a temporary file in the target directory and renames it
// into place, so a failed run never leaves a partial report behind.
void write_atomically(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    auto tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw misi::IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw misi::IoError("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw misi::IoError("cannot move report to '" + path + "': " + ec.message());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mutual-information sensitivity indices: sampling, ranking and design loops"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    int threads = 0;
    misi::CommandOptions opts;
    std::size_t bins = 0;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "TOML or JSON run config")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "base seed (overrides analysis.base_seed)");
        sub->add_option("--out", out_path, "output file (default: output.path, else stdout)");
        sub->add_option("--threads", threads, "worker threads; results do not depend on it")
            ->check(CLI::NonNegativeNumber);
    };
    auto* sample = app.add_subcommand("sample", "draw CVs from the prior (and QoIs from the model) as CSV");
    auto* rank = app.add_subcommand("rank", "estimate and rank sensitivity indices; JSON report");
    auto* curve = app.add_subcommand("curve", "scatter and binned means of one QoI against one CV; CSV");
    auto* loop = app.add_subcommand("loop", "rank over the full prior and inside [subspace]; JSON report");
    for (auto* sub : {sample, rank, curve, loop}) common(sub);
    curve->add_option("--cv", opts.curve_cv, "control variable");
    curve->add_option("--qoi", opts.curve_qoi, "quantity of interest");
    curve->add_option("--bins", bins, "number of equal-width bins")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends exit 0; every usage error exits 2
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (threads > 0) omp_set_num_threads(threads);
        opts.seed = seed;
        if (bins > 0) opts.curve_bins = bins;
        const auto cfg = misi::load_config(config_path);

        std::string output;
        bool json_report = false;
        if (sample->parsed()) {
            output = misi::cmd_sample(cfg, opts);
        } else if (rank->parsed()) {
            output = misi::cmd_rank(cfg, opts);
            json_report = true;
        } else if (curve->parsed()) {
            output = misi::cmd_curve(cfg, opts);
        } else {
            output = misi::cmd_loop(cfg, opts);
            json_report = true;
        }

        const auto path = out_path.empty() ? cfg.output_path : out_path;
        if (path.empty() || path == "-")
            std::cout << output << std::flush;
        else
            write_atomically(path, output);
        if (json_report && cfg.output_table) std::cerr << misi::report_table(output);
        return 0;
    } catch (const misi::Error& e) {
        std::cerr << "misi: " << e.what() << "\n";
        return e.kind() == "ConfigError" ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "misi: " << e.what() << "\n";
        return 1;
    }
}
