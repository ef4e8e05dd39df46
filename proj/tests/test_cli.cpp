// End-to-end test of the command-line tool. argv[1] must be the binary path.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "oracles.hpp"
#include "ttb/dynamics.hpp"
#include "ttb/tbf.hpp"

namespace fs = std::filesystem;
using namespace ttb;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        ++failures;
        std::cerr << "[FAIL] " << what << '\n';
    }
}

int run(const std::string& cmd, const fs::path& dir) {
    const std::string full =
        cmd + " > " + (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(full.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli <path-to-cli>\n";
        return 1;
    }
    const std::string cli = argv[1];
    const fs::path dir = fs::temp_directory_path() / "ttb_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // fixtures
    DenseTensor v = oracles::random_dense({3, 3, 3}, 7);
    write_dense_file((dir / "v.dense").string(), v);
    DimensionTree tree = DimensionTree::standard(TreeKind::TT, 3);
    {
        std::ofstream out(dir / "tree.txt");
        out << tree.serialize();
    }
    HartreeState s0;
    s0.lambda = 1.0;
    for (int j = 0; j < 3; ++j)
        s0.factors.push_back(oracles::random_matrix(3, 1, 30 + j).col(0).normalized());
    write_tbf_file((dir / "r1.tbf").string(),
                   from_dense(s0.to_dense(), DimensionTree::standard(TreeKind::Tucker, 3), 0.0));
    SumOfProductsOperator A;
    A.mode_dims = {3, 3, 3};
    for (int j = 0; j < 3; ++j) {
        SumOfProductsOperator::Term t;
        t.weight = 1.0;
        for (int k = 0; k < 3; ++k) {
            Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
            if (k == j) {
                Eigen::MatrixXd g = oracles::random_matrix(3, 3, 40 + j);
                m = 0.3 * (g + g.transpose());
            }
            t.factors.push_back(m);
        }
        A.terms.push_back(t);
    }
    write_sop_file((dir / "op.sop").string(), A);

    const std::string in = (dir / "v.dense").string();
    const std::string tr = (dir / "tree.txt").string();

    // ranks: exit 0, r lines present, admissible verdict
    check(run(cli + " ranks --tree " + tr + " --input " + in + " --tol 0", dir) == 0,
          "ranks exits 0");
    std::string out = slurp(dir / "stdout.txt");
    check(out.find("NODE 1,2,3 RANK 1") != std::string::npos, "root rank reported");
    check(out.find("ADMISSIBLE yes") != std::string::npos, "admissibility verdict");

    // compress: file written, exact
    check(run(cli + " compress --tree tt --input " + in + " --tol 0 --output " +
                  (dir / "x.tbf").string(),
              dir) == 0,
          "compress exits 0");
    TBFTensor x = read_tbf_file((dir / "x.tbf").string());
    check(frobenius_norm(evaluate(x) - v) < 1e-10, "compress output is exact");

    // compress with rank caps
    check(run(cli + " compress --tree tt --input " + in + " --ranks 'all=2' --output " +
                  (dir / "x2.tbf").string(),
              dir) == 0,
          "capped compress exits 0");
    TBFTensor x2 = read_tbf_file((dir / "x2.tbf").string());
    check(x2.rank(x2.tree.find(ModeSet({1, 2}))) == 2, "caps applied");

    // truncate with inadmissible target -> exit 2
    check(run(cli + " truncate --tree tt --input " + in + " --ranks '1,2,3=4'", dir) == 2,
          "inadmissible truncate exits 2");
    check(run(cli + " truncate --tree tt --input " + in + " --ranks 'all=2' --output " +
                  (dir / "t.tbf").string(),
              dir) == 0,
          "truncate exits 0");
    out = slurp(dir / "stdout.txt");
    check(out.find("ERROR_BOUND") != std::string::npos, "truncate reports bound");

    // project the base point onto its own tangent space: identity report
    check(run(cli + " project --base " + (dir / "x2.tbf").string() + " --input " + in +
                  " --output " + (dir / "p.dense").string(),
              dir) == 0,
          "project exits 0");
    out = slurp(dir / "stdout.txt");
    check(out.find("RESIDUAL") != std::string::npos, "project reports residual");

    // evolve, both integrators
    check(run(cli + " evolve --input " + (dir / "r1.tbf").string() + " --operator " +
                  (dir / "op.sop").string() +
                  " --dt 0.01 --t-end 0.1 --integrator hartree --output " +
                  (dir / "traj_h.txt").string(),
              dir) == 0,
          "hartree evolve exits 0");
    check(run(cli + " evolve --input " + (dir / "r1.tbf").string() + " --operator " +
                  (dir / "op.sop").string() +
                  " --dt 0.01 --t-end 0.1 --integrator tangent --output " +
                  (dir / "traj_t.txt").string() + " --final-state " + (dir / "f.tbf").string(),
              dir) == 0,
          "tangent evolve exits 0");
    {
        std::istringstream h(slurp(dir / "traj_h.txt"));
        int lines = 0;
        std::string line;
        while (std::getline(h, line))
            if (!line.empty()) ++lines;
        check(lines == 11, "trajectory has one line per sample");
    }

    // error codes: missing file -> 4, bad tree -> 2
    check(run(cli + " ranks --tree tt --input " + (dir / "missing.dense").string(), dir) == 4,
          "missing input exits 4");
    {
        std::ofstream bad(dir / "bad_tree.txt");
        bad << "NODE 1,2,3 CHILDREN 1\n  NODE 1 CHILDREN 0\n";
    }
    check(run(cli + " ranks --tree " + (dir / "bad_tree.txt").string() + " --input " + in,
              dir) == 2,
          "invalid tree exits 2");
    check(run(cli + " badcmd", dir) == 2, "unknown subcommand exits 2");

    if (failures == 0) std::cout << "all cli checks passed\n";
    return failures;
}
