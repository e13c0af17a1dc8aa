#pragma once

// Implementation of the `tenspec` subcommands, kept separate from main() so
// tests can drive them in-process.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tenspec/decomposition.hpp"
#include "tenspec/io.hpp"
#include "tenspec/oracle.hpp"
#include "tenspec/tensor.hpp"

namespace tenspec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad command-line input; maps to exit code 2.
class InvalidSpec : public TensorError {
    using TensorError::TensorError;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitToleranceFailure = 1;
inline constexpr int kExitInvalid = 2;

inline void log_phase(const std::string& msg) { std::cerr << "[tenspec] " << msg << '\n'; }

enum class Algorithm { automatic, op, transform, triple };

inline Algorithm parse_algorithm(const std::string& name) {
    if (name == "auto") return Algorithm::automatic;
    if (name == "op") return Algorithm::op;
    if (name == "transform") return Algorithm::transform;
    if (name == "triple") return Algorithm::triple;
    throw InvalidSpec("unknown algorithm '" + name + "'");
}

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::automatic: return "auto";
        case Algorithm::op: return "op";
        case Algorithm::transform: return "transform";
        case Algorithm::triple: return "triple";
    }
    return "auto";
}

using AnyDecomposition = std::variant<OperatorDecomposition, TransformDecomposition, TripleDecomposition>;

inline Algorithm algorithm_of(const AnyDecomposition& d) {
    return static_cast<Algorithm>(d.index() + 1);
}

/// Resolves `auto` and runs the chosen algorithm. `auto` picks op for a
/// self-adjoint two-group tensor with I == J (falling back to transform if
/// the operator turns out indefinite), transform for other two-group
/// tensors, and triple for three groups.
inline AnyDecomposition run_algorithm(const GroupedTensor& a, Algorithm algorithm, const DecompositionOptions& opts = {}) {
    if (algorithm == Algorithm::automatic) {
        if (a.group_count() == 3) {
            algorithm = Algorithm::triple;
        } else if (is_self_adjoint(a, opts.symmetry_tol)) {
            try {
                return decompose_sa_nnd(a, opts);
            } catch (const NotNND&) {
                algorithm = Algorithm::transform;
            }
        } else {
            algorithm = Algorithm::transform;
        }
    }
    switch (algorithm) {
        case Algorithm::op:
            if (a.group_count() != 2) throw GroupingMismatch("algorithm op needs two groups");
            return decompose_sa_nnd(a, opts);
        case Algorithm::transform:
            if (a.group_count() != 2) throw GroupingMismatch("algorithm transform needs two groups");
            return decompose_transform(a, opts);
        case Algorithm::triple:
            if (a.group_count() != 3) throw GroupingMismatch("algorithm triple needs three groups");
            return decompose_triple(a, opts);
        default: break;
    }
    throw InvalidSpec("unresolved algorithm");
}

inline std::span<const double> weights_of(const AnyDecomposition& d) {
    return std::visit([](const auto& x) { return x.weights(); }, d);
}

// ---------------------------------------------------------------------------
// Reports and output files

struct RunReport {
    std::string name;
    Algorithm algorithm = Algorithm::automatic;
    std::optional<std::uint64_t> seed;
    std::vector<std::size_t> shape;
    std::vector<std::size_t> groups;
    std::vector<double> spectrum;  ///< retained weights, non-increasing
    std::size_t rank = 0;          ///< r, or M = r1*r2 for triple
    std::optional<std::size_t> keep;
    double reconstruction_relative_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::int64_t wall_time_ms = 0;  ///< logged only; never written to files
    std::optional<oracle::OracleReport> oracle;
    std::vector<ResidualPoint> residuals;
    json extra = json::object();

    [[nodiscard]] int exit_code() const { return passed ? kExitOk : kExitToleranceFailure; }
};

inline json to_json(const oracle::OracleReport& r) {
    return json{{"singulars_reference", r.singulars_reference},
                {"max_singular_deviation", r.max_singular_deviation},
                {"max_reconstruction_error", r.max_reconstruction_error},
                {"passed", r.passed}};
}

inline json to_json(const RunReport& r) {
    json j;
    j["name"] = r.name;
    j["algorithm"] = algorithm_name(r.algorithm);
    j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
    j["shape"] = r.shape;
    j["groups"] = r.groups;
    j["rank"] = r.rank;
    j["keep"] = r.keep ? json(*r.keep) : json(nullptr);
    j["spectrum"] = r.spectrum;
    j["reconstruction_relative_error"] = r.reconstruction_relative_error;
    j["tolerance"] = r.tolerance;
    j["passed"] = r.passed;
    j["oracle"] = r.oracle ? to_json(*r.oracle) : json(nullptr);
    for (const auto& [key, value] : r.extra.items()) j[key] = value;
    return j;
}

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw TensorError("cannot open " + path.string() + " for writing");
    os << text;
}

/// CSV with header `index,weight`; indices are 1-based.
inline std::string spectrum_csv(std::span<const double> weights) {
    std::string out = "index,weight\n";
    for (std::size_t p = 0; p < weights.size(); ++p) out += std::to_string(p + 1) + "," + format_double(weights[p]) + "\n";
    return out;
}

inline std::string residual_csv(const std::vector<ResidualPoint>& curve) {
    std::string out = "keep,relative_error\n";
    for (const auto& pt : curve) out += std::to_string(pt.keep) + "," + format_double(pt.relative_error) + "\n";
    return out;
}

inline void write_report_files(const RunReport& r, const fs::path& dir, const std::string& prefix) {
    write_text(dir / (prefix + "spectrum.csv"), spectrum_csv(r.spectrum));
    write_text(dir / (prefix + "residuals.csv"), residual_csv(r.residuals));
    write_text(dir / (prefix + "report.json"), to_json(r).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentSpec {
    std::string name;                 ///< exp1 | exp2 | exp3 | custom
    std::vector<std::size_t> dims;    ///< shape of the generated tensor
    std::vector<std::size_t> groups;  ///< mode counts per group
    Algorithm algorithm = Algorithm::automatic;
    std::uint64_t seed = 42;
    double tolerance = 1e-8;
    bool zero_input = false;  ///< custom only: decompose the zero tensor
    bool run_oracle = true;
    fs::path out_dir = ".";
};

/// exp1: SA-NND operator over I x I, I = (16,16,3), built as a Gram operator.
/// exp2: I = (64), J = (8,4). exp3: I = (64), J = (16), K = (3).
inline ExperimentSpec experiment_preset(const std::string& name) {
    ExperimentSpec s;
    s.name = name;
    if (name == "exp1") {
        s.dims = {16, 16, 3, 16, 16, 3};
        s.groups = {3, 3};
        s.algorithm = Algorithm::op;
        s.tolerance = 1e-8;
        // The one-sided Jacobi replay of a 768 x 768 operator costs more than
        // the decomposition itself; run it through `verify` when wanted.
        s.run_oracle = false;
    } else if (name == "exp2") {
        s.dims = {64, 8, 4};
        s.groups = {1, 2};
        s.algorithm = Algorithm::transform;
        s.tolerance = 1e-8;
    } else if (name == "exp3") {
        s.dims = {64, 16, 3};
        s.groups = {1, 1, 1};
        s.algorithm = Algorithm::triple;
        s.tolerance = 1e-10;
    } else if (name == "custom") {
        s.dims = {2, 2};
        s.groups = {1, 1};
    } else {
        throw InvalidSpec("unknown experiment '" + name + "' (expected exp1, exp2, exp3 or custom)");
    }
    return s;
}

inline GroupedTensor experiment_input(const ExperimentSpec& spec) {
    Shape shape(spec.dims);
    if (spec.name == "exp1") {
        // Random A over I x I; the decomposed operator is G = A^T A.
        GroupedTensor seedling(random_tensor(shape, spec.seed), spec.groups);
        return gram_operator(seedling, GramSide::right);
    }
    DenseTensor t = spec.zero_input ? DenseTensor(shape) : random_tensor(shape, spec.seed);
    return {std::move(t), spec.groups};
}

inline std::optional<oracle::OracleReport> run_oracle(const GroupedTensor& a, const AnyDecomposition& d,
                                                      const oracle::Tolerances& tol) {
    return std::visit([&](const auto& x) { return oracle::verify_decomposition(a, x, tol); }, d);
}

inline RunReport summarize(const std::string& name, const GroupedTensor& a, const AnyDecomposition& d,
                           std::optional<std::size_t> keep, double tolerance) {
    RunReport r;
    r.name = name;
    r.algorithm = algorithm_of(d);
    r.shape = a.tensor().shape().dims();
    r.groups = a.groups();
    const auto w = weights_of(d);
    r.spectrum.assign(w.begin(), w.end());
    r.rank = w.size();
    r.keep = keep;
    r.tolerance = tolerance;
    std::visit(
        [&](const auto& x) {
            r.residuals = residual_curve(a, x);
            const std::size_t used = keep.value_or(x.component_count());
            r.reconstruction_relative_error = r.residuals.at(used).relative_error;
        },
        d);
    if (const auto* t = std::get_if<TripleDecomposition>(&d)) {
        r.extra["r1"] = t->stages.sigma.size();
        r.extra["r2"] = t->stages.gamma.size();
    }
    r.passed = r.reconstruction_relative_error <= tolerance;
    return r;
}

/// Runs one experiment, writing <name>_input.tz1, <name>_spectrum.csv,
/// <name>_residuals.csv and <name>_report.json into spec.out_dir.
inline RunReport run_experiment(const ExperimentSpec& spec) {
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(spec.out_dir);
    log_phase(spec.name + ": building input (seed " + std::to_string(spec.seed) + ")");
    const GroupedTensor a = experiment_input(spec);
    io::write_tz1(spec.out_dir / (spec.name + "_input.tz1"), a.tensor());

    log_phase(spec.name + ": decomposing");
    const AnyDecomposition d = run_algorithm(a, spec.algorithm);
    RunReport r = summarize(spec.name, a, d, std::nullopt, spec.tolerance);
    r.seed = spec.seed;
    if (spec.run_oracle) {
        log_phase(spec.name + ": oracle replay");
        r.oracle = run_oracle(a, d, {1e-8, spec.tolerance});
    }
    r.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    write_report_files(r, spec.out_dir, spec.name + "_");
    log_phase(spec.name + ": rank " + std::to_string(r.rank) + ", relative error " +
              format_double(r.reconstruction_relative_error) + ", " + std::to_string(r.wall_time_ms) + " ms");
    return r;
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeRequest {
    fs::path input;
    std::vector<std::size_t> groups;
    Algorithm algorithm = Algorithm::automatic;
    std::optional<std::size_t> keep;
    double tolerance = 1e-8;
    fs::path out_dir = ".";
};

/// Parses "a,b,c" into positive integers.
inline std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t value = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size() || value == 0)
            throw InvalidSpec("bad list entry '" + item + "' in '" + text + "'");
        values.push_back(value);
    }
    if (values.empty()) throw InvalidSpec("empty list");
    return values;
}

inline std::vector<std::size_t> parse_groups(const std::string& text) {
    auto groups = parse_size_list(text);
    if (groups.size() != 2 && groups.size() != 3) throw InvalidSpec("--groups needs 2 or 3 entries");
    return groups;
}

inline std::string factor_name(const std::string& family, std::size_t m) {
    std::string idx = std::to_string(m + 1);
    return family + "_" + std::string(idx.size() < 4 ? 4 - idx.size() : 0, '0') + idx + ".tz1";
}

inline std::vector<std::vector<std::size_t>> group_shapes(const GroupedTensor& a) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t g = 0; g < a.group_count(); ++g) out.push_back(a.group_shape(g).dims());
    return out;
}

/// Writes factor files and manifest.json; returns the manifest.
inline json write_factors(const GroupedTensor& a, const AnyDecomposition& d, std::size_t keep, double tolerance,
                          const fs::path& dir, const std::string& input_name) {
    json manifest;
    manifest["version"] = 1;
    manifest["algorithm"] = algorithm_name(algorithm_of(d));
    manifest["input"] = input_name;
    manifest["shape"] = a.tensor().shape().dims();
    manifest["groups"] = a.groups();
    manifest["group_shapes"] = group_shapes(a);
    const auto w = weights_of(d);
    manifest["weights"] = std::vector<double>(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(keep));
    manifest["tolerances"] = {{"rank_tol", EigenOptions{}.rank_tol},
                              {"singular", 1e-8},
                              {"reconstruction", tolerance}};

    json factors = json::object();
    auto emit = [&](const std::string& family, const std::vector<DenseTensor>& tensors) {
        json names = json::array();
        for (std::size_t m = 0; m < keep; ++m) {
            const auto name = factor_name(family, m);
            io::write_tz1(dir / name, tensors[m]);
            names.push_back(name);
        }
        factors[family] = names;
    };
    if (const auto* op = std::get_if<OperatorDecomposition>(&d)) {
        emit("U", op->eigentensors);
    } else if (const auto* tr = std::get_if<TransformDecomposition>(&d)) {
        emit("U", tr->left);
        emit("V", tr->right);
    } else if (const auto* tp = std::get_if<TripleDecomposition>(&d)) {
        emit("U", tp->factors_u);
        emit("Z", tp->factors_z);
        emit("W", tp->factors_w);
        json pairs = json::array();
        for (std::size_t m = 0; m < keep; ++m)
            pairs.push_back({tp->stages.pair_map[m].first + 1, tp->stages.pair_map[m].second + 1});
        manifest["pair_map"] = pairs;
        manifest["sigma"] = tp->stages.sigma;
        manifest["gamma"] = tp->stages.gamma;
    }
    manifest["factors"] = factors;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

/// Decomposes a TZ1 file; writes factor files, manifest.json, spectrum.csv,
/// residuals.csv and report.json into req.out_dir.
inline RunReport run_decompose(const DecomposeRequest& req) {
    const auto start = std::chrono::steady_clock::now();
    log_phase("reading " + req.input.string());
    DenseTensor t = io::read_tz1(req.input);
    const GroupedTensor a(std::move(t), req.groups);
    if (req.algorithm == Algorithm::op) {
        const auto check = is_self_adjoint(a);
        if (!check) throw NotSelfAdjoint("tensor is not a self-adjoint operator: " + check.reason, check.max_asymmetry);
    }
    log_phase("decomposing");
    const AnyDecomposition d = run_algorithm(a, req.algorithm);
    const std::size_t count = weights_of(d).size();
    if (req.keep && *req.keep > count)
        throw InvalidKeep("--keep " + std::to_string(*req.keep) + " exceeds component count " + std::to_string(count));
    RunReport r = summarize(req.input.stem().string(), a, d, req.keep, req.tolerance);

    fs::create_directories(req.out_dir);
    write_factors(a, d, req.keep.value_or(count), req.tolerance, req.out_dir, req.input.filename().string());
    write_report_files(r, req.out_dir, "");
    r.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    log_phase("rank " + std::to_string(r.rank) + ", relative error " + format_double(r.reconstruction_relative_error) +
              ", " + std::to_string(r.wall_time_ms) + " ms");
    return r;
}

// ---------------------------------------------------------------------------
// verify

namespace detail {

inline json load_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open manifest " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
}

inline std::vector<DenseTensor> load_family(const json& manifest, const std::string& family, const fs::path& dir,
                                            const Shape& expected) {
    std::vector<DenseTensor> out;
    for (const auto& name : manifest.at("factors").at(family)) {
        DenseTensor t = io::read_tz1(dir / name.get<std::string>());
        if (!(t.shape() == expected))
            throw ParseError("factor " + name.get<std::string>() + " has shape " + t.shape().to_string() + ", expected " +
                             expected.to_string());
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace detail

/// Rebuilds the decomposition described by a manifest and replays it
/// through the oracle.
inline oracle::OracleReport run_verify(const fs::path& input, const fs::path& manifest_path) {
    const json m = detail::load_json(manifest_path);
    const fs::path dir = manifest_path.parent_path();
    try {
        DenseTensor t = io::read_tz1(input);
        const auto groups = m.at("groups").get<std::vector<std::size_t>>();
        if (t.shape().dims() != m.at("shape").get<std::vector<std::size_t>>())
            throw GroupingMismatch("input shape " + t.shape().to_string() + " does not match manifest");
        const GroupedTensor a(std::move(t), groups);
        const auto weights = m.at("weights").get<std::vector<double>>();
        const auto algorithm = parse_algorithm(m.at("algorithm").get<std::string>());
        oracle::Tolerances tol;
        tol.singular = m.at("tolerances").at("singular").get<double>();
        tol.reconstruction = m.at("tolerances").at("reconstruction").get<double>();

        auto check_count = [&](const std::vector<DenseTensor>& f) {
            if (f.size() != weights.size()) throw ParseError("factor count does not match weight count");
        };
        log_phase("verifying " + input.string() + " against " + manifest_path.string());
        switch (algorithm) {
            case Algorithm::op: {
                OperatorDecomposition d{a.group_shape(0), weights, {}, {}};
                d.eigentensors = detail::load_family(m, "U", dir, a.group_shape(0));
                check_count(d.eigentensors);
                return oracle::verify_decomposition(a, d, tol);
            }
            case Algorithm::transform: {
                TransformDecomposition d{a.group_shape(0), a.group_shape(1), weights, {}, {}, {}};
                d.left = detail::load_family(m, "U", dir, a.group_shape(0));
                d.right = detail::load_family(m, "V", dir, a.group_shape(1));
                check_count(d.left);
                check_count(d.right);
                return oracle::verify_decomposition(a, d, tol);
            }
            case Algorithm::triple: {
                TripleDecomposition d{a.group_shape(0), a.group_shape(1), a.group_shape(2), weights, {}, {}, {}, {}};
                d.factors_u = detail::load_family(m, "U", dir, a.group_shape(0));
                d.factors_z = detail::load_family(m, "Z", dir, a.group_shape(1));
                d.factors_w = detail::load_family(m, "W", dir, a.group_shape(2));
                check_count(d.factors_u);
                check_count(d.factors_z);
                check_count(d.factors_w);
                d.stages.sigma = m.at("sigma").get<std::vector<double>>();
                d.stages.gamma = m.at("gamma").get<std::vector<double>>();
                return oracle::verify_decomposition(a, d, tol);
            }
            default: throw ParseError("manifest algorithm must be op, transform or triple");
        }
    } catch (const json::exception& e) {
        throw ParseError("manifest " + manifest_path.string() + ": " + e.what());
    }
}

}  // namespace tenspec::cli
