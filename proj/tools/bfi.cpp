// Command-line front end: instance generation, verification, seeded sweeps,
// calibration, and the exhaustive-oracle cross check.
//
// Exit codes: 0 success, 1 parse/usage error, 2 invariant violation
// (offending cube or check serialized into the report), 3 singular
// instance without --allow-singular.

#include <bfi/batches.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

using namespace bfi;

namespace {

struct GenFlags {
    GenSpec spec;
    std::string atoms = "8,8,8";

    void attach(CLI::App* cmd) {
        cmd->add_option("--seed", spec.seed, "instance seed");
        cmd->add_option("--n", spec.n, "dimension");
        cmd->add_option("--alpha", spec.alpha, "operator order, 0 < alpha < 2n");
        cmd->add_option("--p1", spec.p1, "exponent p1");
        cmd->add_option("--p2", spec.p2, "exponent p2");
        cmd->add_option("--q", spec.q, "exponent q");
        cmd->add_option("--atoms", atoms, "atom counts A,B,C for sigma1,sigma2,w");
        cmd->add_option("--kmin", spec.k_min, "coarsest admitted scale");
        cmd->add_option("--kmax", spec.k_max, "finest admitted scale");
        cmd->add_option("--delta", spec.delta, "exceptional-set threshold");
        cmd->add_option("--spread", spec.spread_log2, "log2 of the coordinate range");
        cmd->add_flag("--force-exponents", spec.force_exponents,
                      "accept exponents outside the theorem hypotheses");
    }

    GenSpec parse() {
        int a = 0, b = 0, c = 0;
        if (std::sscanf(atoms.c_str(), "%d,%d,%d", &a, &b, &c) != 3 || a < 1 || b < 1 || c < 1)
            throw CLI::ValidationError("--atoms", "expected three positive counts A,B,C");
        spec.atoms1 = a;
        spec.atoms2 = b;
        spec.atomsw = c;
        return spec;
    }
};

long long run_verify_file(const std::string& path, const std::string& out,
                          const std::string& calpath, bool allow_singular, bool with_oracle,
                          int* exit_code) {
    InstanceFile file;
    try {
        file = InstanceFile::load(path);
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        *exit_code = 1;
        return 0;
    }
    Calibration cal;
    bool have_cal = false;
    if (!calpath.empty()) {
        cal = Calibration::load(calpath);
        have_cal = true;
    }
    Instance inst;
    try {
        inst = file.to_instance();
    } catch (const std::exception& e) {
        std::cerr << "invalid instance: " << e.what() << "\n";
        *exit_code = 1;
        return 0;
    }
    if (inst.singular() && !allow_singular) {
        std::cerr << "singular instance (kernel is infinite at a w-atom); "
                     "rerun with --allow-singular\n";
        *exit_code = 3;
        return 0;
    }
    VerifyOptions opts;
    opts.run_oracle = with_oracle;
    if (have_cal) opts.c2_frozen = cal.c2_for(inst.params.n, inst.params.alpha);
    const auto t0 = std::chrono::steady_clock::now();
    auto rep = verify_theorem(inst, opts);
    const auto wall =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    const auto j = report_to_json(rep, file, have_cal ? &cal : nullptr);
    if (!out.empty())
        write_text(out, j.dump(2) + "\n");
    else
        std::cout << j.dump(2) << "\n";
    std::cerr << "verified in " << wall << " ms: T=" << rep.tc.T << " T1*=" << rep.tc.T1star
              << " T2*=" << rep.tc.T2star << " N_lower=" << rep.n_lower
              << " Nweak_lower=" << rep.nweak_lower << "\n";
    if (!rep.invariants_ok()) {
        std::cerr << "invariant violation: " << rep.violation << "\n";
        *exit_code = 2;
    } else {
        *exit_code = 0;
    }
    return wall;
}

int cmd_sweep(const GenSpec& base, std::uint64_t seed0, int count, const std::string& out,
              const std::string& reports_dir, int threads) {
    std::vector<std::string> rows(count);
    std::vector<char> ok(count, 1);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            GenSpec g = base;
            g.seed = seed0 + static_cast<std::uint64_t>(i);
            const auto t0 = std::chrono::steady_clock::now();
            auto file = gen_instance(g);
            auto inst = file.to_instance();
            VerifyOptions opts;
            opts.run_equivalence = false;
            opts.run_probes = false;
            auto rep = verify_theorem(inst, opts);
            const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            rows[i] = csv_row(g, rep, wall);
            ok[i] = rep.invariants_ok();
            if (!reports_dir.empty())
                write_text(reports_dir + "/report_" + std::to_string(g.seed) + ".json",
                           report_to_json(rep, file, nullptr).dump(2) + "\n");
        }
    };
    std::vector<std::future<void>> futs;
    for (int t = 0; t < std::max(threads, 1); ++t)
        futs.push_back(std::async(std::launch::async, worker));
    for (auto& f : futs) f.get();
    std::string csv = csv_header() + "\n";
    for (const auto& r : rows) csv += r + "\n";
    if (!out.empty())
        write_text(out, csv);
    else
        std::cout << csv;
    for (int i = 0; i < count; ++i)
        if (!ok[i]) {
            std::cerr << "invariant violation at seed " << seed0 + i << "\n";
            return 2;
        }
    return 0;
}

int cmd_calibrate(const std::string& out, int threads, bool quick) {
    Calibration cal;
    // C2: largest observed kernel / (sum over shifts of the dyadic sums).
    for (const auto& b : equivalence_batch(quick ? 10 : 100)) {
        auto vals = run_batch<double>(b, threads, [&](const GenSpec& g) {
            auto inst = gen_instance(g).to_instance();
            VerifyOptions opts;
            opts.run_decomposition = false;
            opts.run_probes = false;
            auto rep = verify_theorem(inst, opts);
            return rep.kernel_vs_shifted_max;
        });
        double mx = 0;
        for (double v : vals) mx = std::max(mx, v);
        cal.c2[alpha_key(b.n, b.alpha)] =
            std::max(cal.c2.count(alpha_key(b.n, b.alpha)) ? cal.c2[alpha_key(b.n, b.alpha)] : 0.0,
                     mx);
        std::cerr << "c2 " << alpha_key(b.n, b.alpha) << " -> " << mx << "\n";
    }
    // R_max: largest sufficiency ratios per configuration and atom count.
    for (const auto& b : ratio_batch(quick ? 5 : 167)) {
        auto vals =
            run_batch<std::pair<double, double>>(b, threads, [&](const GenSpec& g) {
                auto inst = gen_instance(g).to_instance();
                VerifyOptions opts;
                opts.run_equivalence = false;
                opts.run_decomposition = false;
                opts.run_probes = false;
                auto rep = verify_theorem(inst, opts);
                return std::make_pair(rep.ratios_defined ? rep.ratio_strong : 0.0,
                                      rep.ratios_defined ? rep.ratio_weak : 0.0);
            });
        double rs = 0, rw = 0;
        for (auto [a, w] : vals) {
            rs = std::max(rs, a);
            rw = std::max(rw, w);
        }
        const auto key = config_key(b.n, b.alpha, b.p1, b.p2, b.q, b.atoms);
        cal.r_strong[key] = rs;
        cal.r_weak[key] = rw;
        std::cerr << "rmax " << key << " -> strong " << rs << " weak " << rw << "\n";
    }
    cal.save(out);
    std::cerr << "wrote " << out << "\n";
    return 0;
}

int cmd_oracle(const GenSpec& g, int steps) {
    auto inst = gen_instance(g).to_instance();
    if (inst.s1.size() > 3 || inst.s2.size() > 3) {
        std::cerr << "oracle requires at most 3 atoms per input measure\n";
        return 1;
    }
    double gap = 0;
    const double ex = exhaustive_norm_oracle(inst, steps, &gap);
    const double nl = estimate_strong_norm(inst);
    std::cout << "N_exhaustive=" << ex << " N_lower=" << nl << " gap=" << gap << "\n";
    if (std::abs(nl - ex) > gap) {
        std::cerr << "optimizer and oracle disagree beyond the resolution gap\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-weight testing toolkit for bilinear fractional integrals"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a deterministic instance file");
    GenFlags gen_flags;
    gen_flags.attach(gen);
    std::string gen_out;
    gen->add_option("--out", gen_out, "output path (stdout if omitted)");

    // verify
    auto* verify = app.add_subcommand("verify", "verify one instance file");
    std::string vfile, vout, vcal;
    bool allow_singular = false, with_oracle = false;
    verify->add_option("file", vfile, "instance JSON")->required();
    verify->add_option("--out", vout, "report path (stdout if omitted)");
    verify->add_option("--calibration", vcal, "frozen calibration JSON");
    verify->add_flag("--allow-singular", allow_singular, "report singular instances instead of failing");
    verify->add_flag("--oracle", with_oracle, "also run the exhaustive oracle (tiny instances)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a seeded batch and emit a CSV of ratios");
    GenFlags sweep_flags;
    sweep_flags.attach(sweep);
    std::string sweep_out, sweep_reports;
    int sweep_count = 20, sweep_threads = 1;
    std::uint64_t sweep_seed0 = 1;
    sweep->add_option("--count", sweep_count, "number of instances");
    sweep->add_option("--seed0", sweep_seed0, "first seed");
    sweep->add_option("--threads", sweep_threads, "worker threads");
    sweep->add_option("--out", sweep_out, "CSV path (stdout if omitted)");
    sweep->add_option("--emit-reports", sweep_reports, "directory for per-instance reports");

    // calibrate
    auto* calib = app.add_subcommand("calibrate", "freeze C2 and R_max over the declared batch");
    std::string cal_out = "calibration.json";
    int cal_threads = 1;
    bool cal_quick = false;
    calib->add_option("--out", cal_out, "output path");
    calib->add_option("--threads", cal_threads, "worker threads");
    calib->add_flag("--quick", cal_quick, "small batch (smoke use only)");

    // oracle
    auto* orac = app.add_subcommand("oracle", "compare the optimizer against the grid oracle");
    GenFlags orac_flags;
    orac_flags.attach(orac);
    int orac_steps = 64;
    orac->add_option("--steps", orac_steps, "grid steps per free coordinate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }

    try {
        if (gen->parsed()) {
            auto file = gen_instance(gen_flags.parse());
            if (!gen_out.empty())
                file.save(gen_out);
            else
                std::cout << file.to_json().dump(2) << "\n";
            return 0;
        }
        if (verify->parsed()) {
            int code = 0;
            run_verify_file(vfile, vout, vcal, allow_singular, with_oracle, &code);
            return code;
        }
        if (sweep->parsed()) {
            return cmd_sweep(sweep_flags.parse(), sweep_seed0, sweep_count, sweep_out,
                             sweep_reports, sweep_threads);
        }
        if (calib->parsed()) return cmd_calibrate(cal_out, cal_threads, cal_quick);
        if (orac->parsed()) return cmd_oracle(orac_flags.parse(), orac_steps);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
