#include "orbiflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace orbiflow;

int main(int argc, char** argv) {
    CLI::App app{"orbiflow: orbifold classification, graph-orbifold normalization and Ricci-flow kernels"};
    app.require_subcommand(1);

    std::string sig;
    auto* c2 = app.add_subcommand("classify2", "Classify a closed or bounded 2-orbifold signature");
    c2->add_option("signature", sig, "e.g. S2(2,3,7), T2, D2(3), D2//D4")->required();

    std::string path3;
    auto* v3 = app.add_subcommand("validate3", "Parse and validate an orb3 description");
    v3->add_option("file", path3)->required();

    std::string pathg;
    auto* dec = app.add_subcommand("decompose", "Normalize a weak graph orbifold to a strong one");
    dec->add_option("file", pathg)->required();

    cli::Flow2Config f2;
    auto* fl2 = app.add_subcommand("flow2", "Rotationally symmetric Ricci flow on S2(k) / S2(k,k)");
    auto* cone = fl2->add_option("--cone", f2.cone, "teardrop S2(k) seed (k = 1: round sphere)")->check(CLI::PositiveNumber);
    auto* foot = fl2->add_option("--football", f2.football, "perturbed football S2(k,k) seed")->check(CLI::PositiveNumber);
    cone->excludes(foot);
    fl2->add_option("--eps", f2.eps, "football perturbation amplitude");
    fl2->add_option("--grid", f2.grid, "grid intervals");
    fl2->add_option("--t-end", f2.t_end, "stop time");
    fl2->add_option("--snapshot-every", f2.snapshot_every, "CSV snapshot interval in t");
    fl2->add_flag("--to-soliton", f2.to_soliton, "run until the shrinking-soliton residual is below 1e-5");
    fl2->add_flag("--unnormalized", f2.unnormalized, "plain Ricci flow instead of the area-preserving flow");
    fl2->add_option("--out", f2.out_dir, "output directory (default $ORBIFLOW_OUT or .)");
    fl2->add_option("--save-at", f2.save_at, "stop at this time and write --state");
    fl2->add_option("--state", f2.state_path, "state file written by --save-at");
    fl2->add_option("--restore", f2.restore_path, "resume from a state file");

    cli::Flow3Config f3;
    auto* fl3 = app.add_subcommand("flow3", "Doubly warped Ricci flow with neck surgery");
    fl3->set_help_flag("--help", "Print this help message and exit");  // frees -h for the surgery scale
    fl3->add_option("--cross-section", f3.cross_section, "S2, S2(k,k) or S2(p,q,r)");
    fl3->add_option("--seed", f3.seed)->check(CLI::IsMember({"dumbbell", "round", "cylinder"}));
    fl3->add_option("--delta", f3.delta, "neck closeness and surgery parameter");
    fl3->add_option("--h", f3.h, "surgery scale");
    fl3->add_option("--stop-time", f3.stop_time);
    fl3->add_option("--grid", f3.grid, "grid intervals of the seed");
    fl3->add_option("--snapshot-every", f3.snapshot_every);
    fl3->add_option("--out", f3.out_dir, "output directory (default $ORBIFLOW_OUT or .)");
    fl3->add_option("--save-at", f3.save_at);
    fl3->add_option("--state", f3.state_path);
    fl3->add_option("--restore", f3.restore_path);

    cli::LvolumeConfig lv;
    auto* lvol = app.add_subcommand("lvolume", "Reduced volume curve on a model flow");
    lvol->add_option("--model", lv.model)->check(CLI::IsMember({"flat", "sphere", "cylinder"}));
    lvol->add_option("--n", lv.n)->check(CLI::IsMember({2, 3}));
    lvol->add_option("--group-order", lv.group_order)->check(CLI::PositiveNumber);
    lvol->add_option("--tau-grid", lv.tau_grid, "a:b:steps, geometric spacing");
    lvol->add_option("--out", lv.out_path, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kParse;
    }

    try {
        if (*c2) return cli::run_classify2(sig, std::cout);
        if (*v3) return cli::run_validate3(path3, std::cout);
        if (*dec) return cli::run_decompose(pathg, std::cout);
        if (*fl2) return cli::run_flow2(f2, std::cout);
        if (*fl3) return cli::run_flow3(f3, std::cout);
        if (*lvol) return cli::run_lvolume(lv, std::cout);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return cli::kParse;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return cli::kInvariant;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return cli::kNumeric;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return cli::kIo;
    }
    return cli::kOk;
}
