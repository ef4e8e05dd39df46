// Command-line front end: compress, ranks, truncate, project, evolve.
// Exit codes: 0 success, 2 validation error, 3 numerical error, 4 I/O error.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ttb/dense.hpp"
#include "ttb/dynamics.hpp"
#include "ttb/geometry.hpp"
#include "ttb/tbf.hpp"
#include "ttb/tree.hpp"

namespace {

using namespace ttb;

/// --tree accepts a file path or one of the standard kinds
/// (tucker | tt | balanced), instantiated for the input tensor's order.
DimensionTree load_tree(const std::string& spec, int d) {
    if (spec == "tucker") return DimensionTree::standard(TreeKind::Tucker, d);
    if (spec == "tt") return DimensionTree::standard(TreeKind::TT, d);
    if (spec == "balanced") return DimensionTree::standard(TreeKind::Balanced, d);
    std::ifstream in(spec);
    if (!in) throw IoError("cannot open tree file '" + spec + "'");
    DimensionTree t = DimensionTree::parse(in);
    if (t.mode_count() != d)
        throw DimensionError("tree covers " + std::to_string(t.mode_count()) +
                             " modes but the tensor has " + std::to_string(d));
    return t;
}

/// --ranks entries: "modes=r" separated by ';', modes as 1-based
/// comma-separated indices, or "all=r" for every non-root node.
void apply_rank_spec(const std::string& spec, const DimensionTree& tree, TBRank& r) {
    std::stringstream ss(spec);
    std::string entry;
    while (std::getline(ss, entry, ';')) {
        if (entry.find_first_not_of(" \t") == std::string::npos) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw DimensionError("bad --ranks entry '" + entry + "', expected modes=r");
        std::string key = entry.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        const int value = std::stoi(entry.substr(eq + 1));
        if (key == "all") {
            for (int id : tree.preorder())
                if (!tree.is_root(id)) r[id] = value;
            continue;
        }
        std::vector<int> modes;
        std::stringstream ks(key);
        std::string tok;
        while (std::getline(ks, tok, ',')) modes.push_back(std::stoi(tok) - 1);
        const int id = tree.find(ModeSet(modes));
        if (id < 0) throw DimensionError("--ranks names node '" + key + "' not in the tree");
        r[id] = value;
    }
}

void print_ranks(std::ostream& os, const DimensionTree& tree, const TBRank& r) {
    for (int id : tree.preorder())
        os << "NODE " << tree.node(id).to_string() << " RANK " << r[id] << '\n';
}

int cmd_compress(const std::string& tree_spec, const std::string& input, double tol,
                 const std::string& ranks_spec, const std::string& output) {
    DenseTensor v = read_dense_file(input);
    DimensionTree tree = load_tree(tree_spec, v.order());
    std::optional<TBRank> caps;
    if (!ranks_spec.empty()) {
        TBRank r;
        r.r.assign(tree.node_count(), std::numeric_limits<int>::max());
        apply_rank_spec(ranks_spec, tree, r);
        caps = r;
    }
    TBFTensor x = from_dense(v, tree, tol, caps);
    std::cout.precision(17);
    print_ranks(std::cout, tree, x.ranks());
    const double err = frobenius_norm(v - evaluate(x));
    std::cout << "ERROR " << err << '\n';
    if (!output.empty()) write_tbf_file(output, x);
    return 0;
}

int cmd_ranks(const std::string& tree_spec, const std::string& input, double tol) {
    DenseTensor v = read_dense_file(input);
    DimensionTree tree = load_tree(tree_spec, v.order());
    TBRank r = tb_rank(v, tree, tol);
    std::cout.precision(17);
    print_ranks(std::cout, tree, r);
    AdmissibilityReport rep = check_admissible(r, tree, v.dims());
    std::cout << "ADMISSIBLE " << (rep.admissible ? "yes" : "no") << '\n';
    for (const auto& s : rep.violations) std::cout << "VIOLATION " << s << '\n';
    return 0;
}

int cmd_truncate(const std::string& tree_spec, const std::string& input,
                 const std::string& ranks_spec, const std::string& output) {
    DenseTensor v = read_dense_file(input);
    DimensionTree tree = load_tree(tree_spec, v.order());
    TBRank target = tb_rank(v, tree, 0.0);
    if (!ranks_spec.empty()) apply_rank_spec(ranks_spec, tree, target);
    TruncationResult res = truncate(v, tree, target);
    std::cout.precision(17);
    print_ranks(std::cout, tree, res.tensor.ranks());
    std::cout << "ERROR_BOUND " << res.error_bound << '\n';
    std::cout << "ERROR " << frobenius_norm(v - evaluate(res.tensor)) << '\n';
    if (!output.empty()) write_tbf_file(output, orthonormalize(res.tensor));
    return 0;
}

int cmd_project(const std::string& base_path, const std::string& input,
                const std::string& output) {
    TBFTensor base = read_tbf_file(base_path);
    if (!base.orthonormal) base = orthonormalize(base);
    DenseTensor x = read_dense_file(input);
    TangentProjection proj = project_tangent(base, x);
    std::cout.precision(17);
    std::cout << "TANGENT_DIM " << tangent_dimension(base) << '\n';
    std::cout << "RESIDUAL " << proj.residual << '\n';
    std::cout << "PARAM_NORM " << param_norm(proj.params) << '\n';
    std::cout << "PROJECTED_NORM " << frobenius_norm(proj.projected) << '\n';
    if (!output.empty()) write_dense_file(output, proj.projected);
    return 0;
}

int cmd_evolve(const std::string& input, const std::string& op_path, double dt, double t_end,
               const std::string& scheme_name, const std::string& integrator,
               const std::string& output, const std::string& final_path) {
    SumOfProductsOperator A = read_sop_file(op_path);
    const Scheme scheme = scheme_name == "euler" ? Scheme::Euler : Scheme::RK4;
    TBFTensor x0 = read_tbf_file(input);

    std::vector<double> times, lambdas, norms, residuals;
    TBFTensor final_state = x0;
    if (integrator == "hartree") {
        TBRank r = x0.ranks();
        for (int id : x0.tree.preorder())
            if (r[id] != 1)
                throw DimensionError("hartree integration requires a rank-one state");
        // factors from the orthonormal leaf frames, magnitude from the evaluation
        HartreeState s0;
        s0.lambda = 1.0;
        DenseTensor dense0 = evaluate(x0);
        TBFTensor on = x0.orthonormal ? x0 : orthonormalize(x0);
        for (int id : on.tree.leaf_ids()) s0.factors.push_back(on.leaf_frame[id].col(0));
        s0.lambda = inner(dense0, s0.to_dense());
        auto samples = integrate_hartree(A, s0, t_end, dt, scheme);
        for (const auto& smp : samples) {
            times.push_back(smp.t);
            lambdas.push_back(smp.state.lambda);
            norms.push_back(std::abs(smp.state.lambda));
            residuals.push_back(smp.residual);
        }
        final_state = from_dense(samples.back().state.to_dense(), x0.tree, 0.0);
    } else if (integrator == "tangent") {
        VectorField F = [&A](double, const DenseTensor& v) { return apply_operator(A, v); };
        TangentTrajectory traj = integrate_tangent_projected(F, x0, t_end, dt, scheme);
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            times.push_back(traj.times[i]);
            const double norm = frobenius_norm(evaluate(traj.states[i]));
            lambdas.push_back(traj.states[i].transfer[traj.states[i].tree.root()].size() > 0
                                  ? matricize(traj.states[i].transfer[0], std::vector<int>{0})
                                        .norm()
                                  : 0.0);
            norms.push_back(norm);
            residuals.push_back(traj.residuals[i]);
        }
        final_state = traj.states.back();
    } else {
        throw DimensionError("unknown integrator '" + integrator + "'");
    }
    if (!output.empty()) {
        std::ofstream os(output);
        if (!os) throw IoError("cannot open '" + output + "' for writing");
        write_trajectory(os, times, lambdas, norms, residuals);
    } else {
        write_trajectory(std::cout, times, lambdas, norms, residuals);
    }
    if (!final_path.empty()) write_tbf_file(final_path, final_state);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tree-based tensor format toolkit"};
    app.require_subcommand(1);

    std::string tree_spec, input, output, base_path, op_path, ranks_spec;
    std::string scheme_name = "rk4", integrator = "tangent", final_path;
    double tol = ttb::kDefaultTol, dt = 1e-2, t_end = 1.0;
    std::uint64_t seed = 0;

    auto* compress = app.add_subcommand("compress", "compress a dense tensor to the tree format");
    compress->add_option("--tree", tree_spec, "tree file or tucker|tt|balanced")->required();
    compress->add_option("--input", input, "dense tensor file")->required();
    compress->add_option("--tol", tol, "relative rank tolerance (0 = exact)");
    compress->add_option("--ranks", ranks_spec, "rank caps, e.g. '1=2;2,3=2' or 'all=2'");
    compress->add_option("--output", output, "output TBF file");
    compress->add_option("--seed", seed, "unused; accepted for interface stability");

    auto* ranks = app.add_subcommand("ranks", "tree-based rank of a dense tensor");
    ranks->add_option("--tree", tree_spec, "tree file or tucker|tt|balanced")->required();
    ranks->add_option("--input", input, "dense tensor file")->required();
    ranks->add_option("--tol", tol, "relative rank tolerance");

    auto* truncate = app.add_subcommand("truncate", "rank truncation of a dense tensor");
    truncate->add_option("--tree", tree_spec, "tree file or tucker|tt|balanced")->required();
    truncate->add_option("--input", input, "dense tensor file")->required();
    truncate->add_option("--ranks", ranks_spec, "target ranks")->required();
    truncate->add_option("--output", output, "output TBF file");

    auto* project = app.add_subcommand("project", "tangent-space projection at a base point");
    project->add_option("--base", base_path, "base point TBF file")->required();
    project->add_option("--input", input, "dense tensor to project")->required();
    project->add_option("--output", output, "output dense file");

    auto* evolve = app.add_subcommand("evolve", "dynamical low-rank integration");
    evolve->add_option("--input", input, "initial state TBF file")->required();
    evolve->add_option("--operator", op_path, "sum-of-products operator file")->required();
    evolve->add_option("--dt", dt, "time step")->required();
    evolve->add_option("--t-end", t_end, "final time")->required();
    evolve->add_option("--scheme", scheme_name, "rk4|euler")
        ->check(CLI::IsMember({"rk4", "euler"}));
    evolve->add_option("--integrator", integrator, "tangent|hartree")
        ->check(CLI::IsMember({"tangent", "hartree"}));
    evolve->add_option("--output", output, "trajectory file (default stdout)");
    evolve->add_option("--final-state", final_path, "output TBF file for the final state");

    try {
        app.parse(argc, argv);
        if (compress->parsed())
            return cmd_compress(tree_spec, input, tol, ranks_spec, output);
        if (ranks->parsed()) return cmd_ranks(tree_spec, input, tol);
        if (truncate->parsed()) return cmd_truncate(tree_spec, input, ranks_spec, output);
        if (project->parsed()) return cmd_project(base_path, input, output);
        if (evolve->parsed())
            return cmd_evolve(input, op_path, dt, t_end, scheme_name, integrator, output,
                              final_path);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ttb::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 4;
    } catch (const ttb::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const ttb::TreeError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const ttb::ChartError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const ttb::DimensionError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
