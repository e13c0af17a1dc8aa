#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace cli = tenspec::cli;

int main(int argc, char** argv) {
    CLI::App app{"tenspec: exact decompositions of tensor operators and grouped tensors"};
    app.require_subcommand(1);

    std::string experiment_name;
    std::uint64_t seed = 42;
    std::optional<double> tolerance;
    std::string out_dir = ".";
    std::string custom_shape = "2,2";
    std::string custom_groups = "1,1";
    bool custom_zero = false;
    auto* exp = app.add_subcommand("experiment", "run a built-in experiment (exp1, exp2, exp3) or a custom one");
    exp->add_option("name", experiment_name, "exp1 | exp2 | exp3 | custom")->required();
    exp->add_option("--seed", seed, "random seed")->capture_default_str();
    exp->add_option("--tol", tolerance, "relative reconstruction tolerance");
    exp->add_option("--out", out_dir, "output directory")->capture_default_str();
    exp->add_option("--shape", custom_shape, "custom: tensor extents, comma separated");
    exp->add_option("--groups", custom_groups, "custom: modes per group, comma separated");
    exp->add_flag("--zero", custom_zero, "custom: decompose the zero tensor");

    std::string input;
    std::string groups;
    std::string algorithm = "auto";
    std::optional<std::size_t> keep;
    auto* dec = app.add_subcommand("decompose", "decompose a TZ1 tensor file");
    dec->add_option("file", input, "input tensor (TZ1)")->required();
    dec->add_option("--groups", groups, "modes per group: d,e or d,e,f")->required();
    dec->add_option("--algorithm", algorithm, "auto | op | transform | triple")->capture_default_str();
    dec->add_option("--keep", keep, "number of components to keep");
    dec->add_option("--tol", tolerance, "relative reconstruction tolerance");
    dec->add_option("--out", out_dir, "output directory")->capture_default_str();

    std::string manifest;
    auto* ver = app.add_subcommand("verify", "replay a decomposition manifest through the oracle");
    ver->add_option("file", input, "input tensor (TZ1)")->required();
    ver->add_option("manifest", manifest, "manifest.json written by decompose")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitInvalid;
    }

    try {
        if (*exp) {
            cli::ExperimentSpec spec = cli::experiment_preset(experiment_name);
            if (experiment_name == "custom") {
                spec.dims = cli::parse_size_list(custom_shape);
                spec.groups = cli::parse_groups(custom_groups);
                spec.zero_input = custom_zero;
            }
            spec.seed = seed;
            if (tolerance) spec.tolerance = *tolerance;
            spec.out_dir = out_dir;
            const auto report = cli::run_experiment(spec);
            std::cout << cli::to_json(report).dump(2) << '\n';
            return report.exit_code();
        }
        if (*dec) {
            cli::DecomposeRequest req;
            req.input = input;
            req.groups = cli::parse_groups(groups);
            req.algorithm = cli::parse_algorithm(algorithm);
            req.keep = keep;
            if (tolerance) req.tolerance = *tolerance;
            req.out_dir = out_dir;
            const auto report = cli::run_decompose(req);
            std::cout << cli::to_json(report).dump(2) << '\n';
            return report.exit_code();
        }
        const auto report = cli::run_verify(input, manifest);
        std::cout << cli::to_json(report).dump(2) << '\n';
        return report.passed ? cli::kExitOk : cli::kExitToleranceFailure;
    } catch (const tenspec::NotSelfAdjoint& e) {
        std::cerr << "error: NotSelfAdjoint: " << e.what() << " (max asymmetry " << e.max_asymmetry() << ")\n";
        return cli::kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitInvalid;
    }
}
