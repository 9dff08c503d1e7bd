#include "specbias/errors.hpp"
#include "specbias/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace specbias;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format = "csv";
    std::optional<int> n;
    std::optional<int> repetitions;
    std::string kernel;
    std::optional<int> width;
    std::optional<double> std_dev;
};

ExperimentConfig build_config(const std::string& experiment, const Options& opt)
{
    ExperimentConfig cfg;
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) {
            throw InvalidArgument("config: cannot open '" + opt.config_path + "'");
        }
        Json doc;
        try {
            doc = Json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("config: '" + opt.config_path + "' is not valid JSON (" + e.what() + ")");
        }
        if (doc.is_object() && doc.contains("experiment") && doc["experiment"] != experiment) {
            const auto& named = doc["experiment"];
            throw InvalidArgument("config: experiment '" + (named.is_string() ? named.get<std::string>() : named.dump()) +
                                  "' does not match the subcommand '" + experiment + "'");
        }
        cfg = parse_config(doc);
    }
    cfg.experiment = experiment;
    if (experiment == "decoder" && opt.config_path.empty()) {
        cfg.signal.law = SignalLaw::Step;
        cfg.noise.varsigma = 0.0;
    }
    if (opt.seed) {
        cfg.seed = *opt.seed;
    }
    if (opt.n) {
        cfg.n = *opt.n;
    }
    if (opt.repetitions) {
        cfg.repetitions = *opt.repetitions;
    }
    if (!opt.kernel.empty()) {
        cfg.kernel.preset = kernel_preset_from_string(opt.kernel);
    }
    if (opt.width) {
        cfg.kernel.params.width = *opt.width;
    }
    if (opt.std_dev) {
        cfg.kernel.params.std_dev = *opt.std_dev;
    }
    cfg.validate();
    return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidArgument("cannot write '" + path.string() + "'");
    }
    out << content;
}

void emit(const ExperimentResult& result, const Options& opt)
{
    if (!opt.out_dir.empty()) {
        const std::filesystem::path dir(opt.out_dir);
        std::filesystem::create_directories(dir);
        for (const auto& [name, content] : result.files) {
            write_file(dir / name, content);
        }
        write_file(dir / "summary.json", result.summary.dump(2) + "\n");
        return;
    }
    if (opt.format == "json") {
        std::cout << result.summary.dump(2) << '\n';
    } else if (!result.files.empty()) {
        std::cout << result.files.front().second;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral-bias laboratory for untrained convolutional generators"};
    app.fallthrough();
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "JSON experiment configuration");
    app.add_option("--seed", opt.seed, "Root seed for all randomness");
    app.add_option("--out", opt.out_dir, "Directory for CSV files and summary.json");
    app.add_option("--format", opt.format, "Stdout format when --out is not given")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--n", opt.n, "Signal length");
    app.add_option("--repetitions", opt.repetitions, "Number of seeded repetitions");

    std::string chosen;
    struct Sub {
        const char* name;
        const char* help;
    };
    for (const Sub& s : {Sub{"dual-kernel", "Dual kernel of a filter as index,frequency,value"},
                         Sub{"denoise", "Early-stopping denoising benchmark"},
                         Sub{"dynamics", "Predicted vs. observed residual dynamics"},
                         Sub{"jacobian", "Jacobian singular spectrum and trig alignment"},
                         Sub{"decoder", "Fit the one-dimensional deep decoder"},
                         Sub{"fit-curves", "Structured target vs. equal-norm noise"},
                         Sub{"report", "Dual kernels and low-frequency mass for several filters"}}) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->callback([&chosen, name = std::string(s.name)] { chosen = name; });
        if (std::string(s.name) == "dual-kernel") {
            sub->add_option("--kernel", opt.kernel, "delta | triangular | gaussian");
            sub->add_option("--width", opt.width, "Triangular support width (odd)");
            sub->add_option("--std", opt.std_dev, "Gaussian standard deviation");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        const ExperimentConfig cfg = build_config(chosen, opt);
        emit(run_experiment(cfg), opt);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
