#include "aqe/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "aqe/engine.hpp"
#include "aqe/gen.hpp"
#include "aqe/verify.hpp"

namespace aqe {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"scan-based approximate query engine with guaranteed error bounds"};
    app.require_subcommand(1);

    // --- build ---
    auto* build = app.add_subcommand("build", "shuffle a csv into a scramble file");
    std::string build_input, build_schema, build_out;
    uint64_t build_seed = 0;
    uint32_t build_block = 40000;
    double widen = 1.0;
    build->add_option("--input", build_input, "source csv")->required();
    build->add_option("--schema", build_schema, "schema json")->required();
    build->add_option("--out", build_out, "output scramble file")->required();
    build->add_option("--seed", build_seed, "shuffle seed");
    build->add_option("--block-size", build_block, "rows per block");
    build->add_option("--widen-factor", widen, "stretch catalog ranges");

    // --- query ---
    auto* query_cmd = app.add_subcommand("query", "run a query against a scramble");
    std::string db_path, bounder_text = "bernstein+rt", strategy_text = "scan", stop_text;
    std::string query_text;
    double delta = 1e-15;
    uint64_t query_seed = 0;
    query_cmd->add_option("--db", db_path, "scramble file")->required();
    query_cmd->add_option("--delta", delta, "error probability budget");
    query_cmd->add_option("--bounder", bounder_text,
                          "hoeffding|hoeffding+rt|bernstein|bernstein+rt|dkw");
    query_cmd->add_option("--strategy", strategy_text, "scan|activesync|activepeek|exact");
    query_cmd->add_option("--stop", stop_text,
                          "taken:M|abs:E|rel:E|thresh:V|topk:K:min|max|ordered");
    query_cmd->add_option("--seed", query_seed, "query seed (start offset)");
    query_cmd->add_option("sql", query_text, "query text")->required();

    // --- gen ---
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic csv");
    std::string gen_spec_path, gen_out;
    uint64_t gen_seed = 0;
    gen_cmd->add_option("--spec", gen_spec_path, "generator spec json")->required();
    gen_cmd->add_option("--out", gen_out, "output csv")->required();
    auto* gen_seed_opt = gen_cmd->add_option("--seed", gen_seed, "override the spec seed");

    // --- verify ---
    auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
    std::string mode;
    uint64_t trials = 0;
    uint64_t verify_seed = 12345;
    bool serial = false;
    verify_cmd
        ->add_option("--mode", mode,
                     "exhaustive|montecarlo|phos|monotonicity|strategy-compare")
        ->required();
    verify_cmd->add_option("--trials", trials, "trial count (mode-specific default)");
    verify_cmd->add_option("--seed", verify_seed, "trial seed");
    verify_cmd->add_flag("--serial", serial, "use the serial reference kernels");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*build) {
            const Schema schema = Schema::from_json_text(slurp(build_schema));
            const TableData table = ingest_csv(build_input, schema);
            BuildOptions opts;
            opts.block_size = build_block;
            opts.widen_factor = widen;
            const Scramble s = build_scramble(table, build_seed, opts);
            save_scramble(s, build_out);
            err << "rows=" << table.n_rows << " dropped=" << table.rows_dropped
                << " blocks=" << s.n_blocks() << "\n";
            return 0;
        }
        if (*query_cmd) {
            const Scramble s = load_scramble(db_path);
            const Query q = parse_query(query_text);
            ExecOptions options;
            options.delta = delta;
            options.bounder = Bounder::parse(bounder_text);
            options.strategy = parse_strategy(strategy_text);
            options.seed = query_seed;
            if (!stop_text.empty()) options.stop = StoppingCondition::parse(stop_text);
            const ExecResult result = execute(plan(q, s, options), s);
            out << to_json_lines(result);
            return 0;
        }
        if (*gen_cmd) {
            GenSpec spec = GenSpec::from_json_text(slurp(gen_spec_path));
            if (*gen_seed_opt) spec.seed = gen_seed;
            const TableData table = generate_table(spec);
            write_csv(table, gen_out);
            err << "rows=" << table.n_rows << "\n";
            return 0;
        }
        if (*verify_cmd) {
            CoverageReport report;
            if (mode == "exhaustive") {
                report = serial ? exhaustive_coverage_serial({}) : exhaustive_coverage({});
            } else if (mode == "montecarlo") {
                MonteCarloParams p;
                p.seed = verify_seed;
                if (trials) p.trials = trials;
                report = serial ? montecarlo_stopping_serial(p) : montecarlo_stopping(p);
            } else if (mode == "phos") {
                const uint64_t n = trials ? trials : 1000;
                report = serial ? phos_check_serial(n, verify_seed) : phos_check(n, verify_seed);
            } else if (mode == "monotonicity") {
                const uint64_t n = trials ? trials : 2000;
                report = serial ? monotonicity_check_serial(n, verify_seed)
                                : monotonicity_check(n, verify_seed);
            } else if (mode == "strategy-compare") {
                StrategyCompareParams p;
                p.seed = verify_seed;
                report = strategy_compare(p);
            } else {
                err << "error: unknown verify mode " << mode << "\n";
                return 2;
            }
            out << report.to_json() << "\n";
            return report.pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace aqe
