#include "rrl/runner.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "rrl/analysis.hpp"
#include "rrl/bms.hpp"
#include "rrl/checkpoint.hpp"
#include "rrl/dataset.hpp"
#include "rrl/errors.hpp"
#include "rrl/fitting.hpp"
#include "rrl/trainer.hpp"

namespace rrl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

std::string c_tag(double c) {
    std::string s = fmt(c);
    for (char& ch : s)
        if (ch == '.') ch = 'p';
    return s;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << content;
}

void write_meta(const fs::path& artifact, const RunConfig& cfg, const std::string& command) {
    json m;
    m["artifact"] = artifact.filename().string();
    m["command"] = command;
    m["config_hash"] = config_hash(cfg);
    m["seed"] = cfg.seed;
    m["schema_version"] = 1;
    write_file(artifact.string() + ".meta.json", m.dump(2) + "\n");
}

TrainConfig train_config_for(const RunConfig& cfg, double c) {
    TrainConfig t;
    t.task = cfg.task.kind;
    t.c_nats = c;
    t.learning_rate = cfg.train.learning_rate;
    t.dual_gain = cfg.train.dual_gain;
    t.n_batches = cfg.train.n_batches;
    t.batch_size = cfg.train.batch_size;
    t.hidden_dim = cfg.train.hidden_dim;
    t.stats_every = cfg.train.stats_every;
    t.eval_episodes = cfg.train.eval_episodes;
    t.seed = cfg.seed;
    t.threads = cfg.threads;
    return t;
}

std::string stats_csv(const std::vector<TrainStatsRow>& stats) {
    std::string out = "batch,regret,kl_nats,beta\n";
    for (const auto& row : stats) {
        out += std::to_string(row.batch);
        out += ',';
        out += fmt(row.regret);
        out += ',';
        out += fmt(row.kl_nats);
        out += ',';
        out += fmt(row.beta);
        out += '\n';
    }
    return out;
}

std::vector<Checkpoint> load_checkpoints(const RunConfig& cfg) {
    std::vector<Checkpoint> out;
    for (const auto& p : cfg.io.checkpoints) out.push_back(load_checkpoint(p));
    if (out.empty()) throw ConfigError("this command needs at least one --checkpoint");
    return out;
}

ChoiceDataset load_dataset(const RunConfig& cfg, int arms) {
    if (cfg.io.dataset.empty()) throw ConfigError("this command needs --dataset");
    const ChoiceDataset ds = ingest(cfg.io.dataset, arms);
    std::cerr << "ingested " << cfg.io.dataset << ": " << ds.n_subjects() << " subjects, "
              << ds.all_games().size() << " games, " << ds.n_rows() << " trials\n";
    return ds;
}

int cmd_train(const RunConfig& cfg) {
    const fs::path out_dir(cfg.io.output_dir);
    fs::create_directories(out_dir);
    for (double c : cfg.train.c_ladder) {
        const TrainConfig tc = train_config_for(cfg, c);
        const std::string tag = std::string(task_kind_name(cfg.task.kind)) + "_c" + c_tag(c) +
                                "_seed" + std::to_string(cfg.seed);
        const fs::path ckpt_path = out_dir / ("ckpt_" + tag + ".rrl");
        const fs::path stats_path = out_dir / ("stats_" + tag + ".csv");
        TrainResult result = train(tc, [&](const ParameterEncoding& enc) {
            Checkpoint diag;
            diag.task = tc.task;
            diag.lambda = enc;
            diag.c_nats = tc.c_nats;
            diag.seed = tc.seed;
            diag.run_hash = config_hash(cfg);
            save_checkpoint(diag, (out_dir / ("diagnostic_" + tag + ".rrl")).string());
        });
        TrainConfig resolved = tc;
        resolved.resolve_defaults();
        save_checkpoint(make_checkpoint(resolved, result, config_hash(cfg)),
                        ckpt_path.string());
        write_meta(ckpt_path, cfg, "train");
        write_file(stats_path, stats_csv(result.stats));
        write_meta(stats_path, cfg, "train");
        std::cerr << "trained C=" << fmt(c) << ": achieved " << fmt(result.achieved_kl)
                  << " nats, regret " << fmt(result.final_regret) << " (untrained "
                  << fmt(result.untrained_regret) << ")\n";
    }
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    const fs::path out_dir(cfg.io.output_dir);
    fs::create_directories(out_dir);
    const auto ladder = load_checkpoints(cfg);
    const Stream root(cfg.seed);
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto& ckpt = ladder[i];
        const ChoiceDataset ds = simulate_dataset(
            ckpt, ckpt.task, cfg.analysis.n_subjects, cfg.analysis.n_games,
            fork(root, Purpose::Simulate, i));
        const fs::path path =
            out_dir / ("sim_" + std::string(task_kind_name(ckpt.task)) + "_c" +
                       c_tag(ckpt.c_nats) + "_seed" + std::to_string(cfg.seed) + ".csv");
        write_choice_csv(ds, path.string());
        write_meta(path, cfg, "simulate");
        std::cerr << "simulated " << path.filename().string() << " (" << ds.n_rows()
                  << " rows)\n";
    }
    return 0;
}

json probit_fit_json(const ProbitFit& f) {
    return json{{"model", choice_model_name(f.model)},
                {"w", {f.w[0], f.w[1], f.w[2]}},
                {"loglik", f.loglik},
                {"n_params", f.n_params},
                {"bic", f.bic},
                {"aic", f.aic},
                {"converged", f.converged},
                {"iterations", f.iterations}};
}

// Per-subject and pooled evidence for every configured model.  RR-RL^2 uses
// the checkpoint ladder, RL^2 the single unconstrained checkpoint.
struct ComparisonTables {
    std::vector<std::string> models;
    std::vector<std::vector<double>> subject_bic;  // [subject][model]
    std::vector<double> aggregate_bic;
    std::vector<double> aggregate_aic;
    json details = json::array();
};

ComparisonTables compare_models(const RunConfig& cfg, const ChoiceDataset& ds,
                                const std::vector<Checkpoint>& rr_ladder,
                                const Checkpoint* rl2_ckpt) {
    ComparisonTables tables;
    const Stream root(cfg.seed);
    const FitContext ctx = FitContext::gaussian2();
    const int n_subjects = ds.n_subjects();

    for (const auto& name : cfg.fit.models) {
        tables.models.push_back(name);
        std::vector<double> bics(static_cast<std::size_t>(n_subjects), 0.0);
        double agg_bic = 0.0, agg_aic = 0.0;
        json detail;
        detail["model"] = name;
        if (name == "rr-rl2" || name == "rl2") {
            std::span<const Checkpoint> ladder;
            if (name == "rr-rl2") {
                if (rr_ladder.empty())
                    throw ConfigError("compare: rr-rl2 requires --checkpoint ladder");
                ladder = rr_ladder;
            } else {
                if (rl2_ckpt == nullptr)
                    throw ConfigError("compare: rl2 requires io.rl2_checkpoint");
                ladder = {rl2_ckpt, 1};
            }
            json subj = json::array();
            for (int s = 0; s < n_subjects; ++s) {
                const Rl2Fit fit =
                    grid_search_rr_rl2(ladder, ds.games_of(s), cfg.fit.mc_samples,
                                       fork(root, Purpose::FitMc, static_cast<std::uint64_t>(s)));
                bics[static_cast<std::size_t>(s)] = fit.bic;
                agg_bic += fit.bic;
                agg_aic += fit.aic;
                subj.push_back({{"subject", ds.subject_id(s)},
                                {"eps", fit.eps},
                                {"c_nats", ladder[static_cast<std::size_t>(fit.checkpoint_index)].c_nats},
                                {"loglik", fit.loglik},
                                {"bic", fit.bic},
                                {"aic", fit.aic}});
            }
            detail["subjects"] = subj;
        } else {
            ChoiceModel model = choice_model_from_name(name);
            if (model == ChoiceModel::Thompson && cfg.fit.thompson_free_w3)
                model = ChoiceModel::ThompsonFreeW3;
            json subj = json::array();
            for (int s = 0; s < n_subjects; ++s) {
                const ProbitFit fit = fit_probit_newton(ds.games_of(s), model, ctx);
                bics[static_cast<std::size_t>(s)] = fit.bic;
                agg_bic += fit.bic;
                agg_aic += fit.aic;
                json jf = probit_fit_json(fit);
                jf["subject"] = ds.subject_id(s);
                subj.push_back(jf);
            }
            detail["subjects"] = subj;
        }
        detail["aggregate_bic"] = agg_bic;
        detail["aggregate_aic"] = agg_aic;
        tables.subject_bic.push_back(bics);
        tables.aggregate_bic.push_back(agg_bic);
        tables.aggregate_aic.push_back(agg_aic);
        tables.details.push_back(detail);
    }
    return tables;
}

int cmd_fit(const RunConfig& cfg) {
    const fs::path out_dir(cfg.io.output_dir);
    fs::create_directories(out_dir);
    const ChoiceDataset ds = load_dataset(cfg, 2);
    const Stream root(cfg.seed);
    const FitContext ctx = FitContext::gaussian2();

    json out;
    out["config_hash"] = config_hash(cfg);
    out["seed"] = cfg.seed;
    json fits = json::array();
    for (const auto& name : cfg.fit.models) {
        if (name == "rr-rl2" || name == "rl2") {
            std::vector<Checkpoint> ladder;
            if (name == "rr-rl2") {
                for (const auto& p : cfg.io.checkpoints) ladder.push_back(load_checkpoint(p));
            } else if (!cfg.io.rl2_checkpoint.empty()) {
                ladder.push_back(load_checkpoint(cfg.io.rl2_checkpoint));
            }
            if (ladder.empty()) continue;  // nothing to fit against
            const Rl2Fit fit = grid_search_rr_rl2(ladder, ds.all_games(), cfg.fit.mc_samples,
                                                  fork(root, Purpose::FitMc));
            fits.push_back({{"model", name},
                            {"eps", fit.eps},
                            {"c_nats", ladder[static_cast<std::size_t>(fit.checkpoint_index)].c_nats},
                            {"loglik", fit.loglik},
                            {"n_params", fit.n_params},
                            {"bic", fit.bic},
                            {"aic", fit.aic}});
        } else {
            ChoiceModel model = choice_model_from_name(name);
            if (model == ChoiceModel::Thompson && cfg.fit.thompson_free_w3)
                model = ChoiceModel::ThompsonFreeW3;
            fits.push_back(probit_fit_json(fit_probit_newton(ds.all_games(), model, ctx)));
        }
    }
    out["fits"] = fits;
    const fs::path path = out_dir / "fit_results.json";
    write_file(path, out.dump(2) + "\n");
    write_meta(path, cfg, "fit");
    return 0;
}

int cmd_compare(const RunConfig& cfg) {
    const fs::path out_dir(cfg.io.output_dir);
    fs::create_directories(out_dir);
    const ChoiceDataset ds = load_dataset(cfg, 2);

    std::vector<Checkpoint> rr_ladder;
    for (const auto& p : cfg.io.checkpoints) rr_ladder.push_back(load_checkpoint(p));
    Checkpoint rl2_ckpt;
    bool have_rl2 = false;
    if (!cfg.io.rl2_checkpoint.empty()) {
        rl2_ckpt = load_checkpoint(cfg.io.rl2_checkpoint);
        have_rl2 = true;
    }

    const ComparisonTables tables =
        compare_models(cfg, ds, rr_ladder, have_rl2 ? &rl2_ckpt : nullptr);
    const int n_models = static_cast<int>(tables.models.size());
    const int n_subjects = ds.n_subjects();

    // Per-subject posteriors from log evidences (-BIC/2) and group BMS.
    std::vector<double> log_evidence(static_cast<std::size_t>(n_subjects * n_models));
    for (int s = 0; s < n_subjects; ++s)
        for (int m = 0; m < n_models; ++m)
            log_evidence[static_cast<std::size_t>(s * n_models + m)] =
                -0.5 * tables.subject_bic[static_cast<std::size_t>(m)][static_cast<std::size_t>(s)];

    std::string posterior_csv = "subject";
    for (const auto& m : tables.models) posterior_csv += "," + m;
    posterior_csv += "\n";
    std::vector<int> best_count(static_cast<std::size_t>(n_models), 0);
    for (int s = 0; s < n_subjects; ++s) {
        const std::span<const double> lev(log_evidence.data() + s * n_models,
                                          static_cast<std::size_t>(n_models));
        const auto post = model_posteriors(lev);
        posterior_csv += std::to_string(ds.subject_id(s));
        int best = 0;
        for (int m = 0; m < n_models; ++m) {
            posterior_csv += "," + fmt(post[static_cast<std::size_t>(m)]);
            if (post[static_cast<std::size_t>(m)] > post[static_cast<std::size_t>(best)]) best = m;
        }
        best_count[static_cast<std::size_t>(best)] += 1;
        posterior_csv += "\n";
    }

    BmsResult bms;
    if (n_subjects >= 2 && n_models >= 2) {
        const Stream root(cfg.seed);
        bms = group_bms_pxp(log_evidence, n_subjects, n_models, fork(root, Purpose::Bms));
    }

    json out;
    out["config_hash"] = config_hash(cfg);
    out["seed"] = cfg.seed;
    out["models"] = tables.models;
    out["aggregate_bic"] = tables.aggregate_bic;
    out["aggregate_aic"] = tables.aggregate_aic;
    out["best_fit_counts"] = best_count;
    if (!bms.pxp.empty()) {
        out["pxp"] = bms.pxp;
        out["exceedance"] = bms.exceedance;
        out["model_frequencies"] = bms.model_freq;
        out["bor"] = bms.bor;
    }
    out["details"] = tables.details;

    const fs::path cmp_path = out_dir / "compare.json";
    write_file(cmp_path, out.dump(2) + "\n");
    write_meta(cmp_path, cfg, "compare");
    const fs::path post_path = out_dir / "posteriors.csv";
    write_file(post_path, posterior_csv);
    write_meta(post_path, cfg, "compare");

    std::cerr << "aggregate BIC:";
    for (int m = 0; m < n_models; ++m)
        std::cerr << ' ' << tables.models[static_cast<std::size_t>(m)] << '='
                  << fmt(tables.aggregate_bic[static_cast<std::size_t>(m)]);
    std::cerr << '\n';
    return 0;
}

int cmd_analyze_igt(const RunConfig& cfg) {
    const fs::path out_dir(cfg.io.output_dir);
    fs::create_directories(out_dir);
    const auto ladder = load_checkpoints(cfg);
    const Stream root(cfg.seed);
    std::string csv = "nats,p_low,p_high\n";
    std::vector<double> nats, p_lows;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto prop = igt_proportions(ladder[i], cfg.analysis.igt_episodes,
                                          fork(root, Purpose::Simulate, i));
        csv += fmt(ladder[i].achieved_nats) + "," + fmt(prop.p_low) + "," + fmt(prop.p_high) +
               "\n";
        nats.push_back(std::log(std::max(ladder[i].achieved_nats, 1e-6)));
        p_lows.push_back(prop.p_low);
    }
    const fs::path path = out_dir / "igt.csv";
    write_file(path, csv);
    write_meta(path, cfg, "analyze-igt");

    if (static_cast<int>(nats.size()) >= cfg.analysis.poly_degree + 2) {
        const PolyCurve curve = poly_regression_summary(nats, p_lows, cfg.analysis.poly_degree,
                                                        nats);
        std::string ccsv = "log_nats,p_low_mean,p_low_sd\n";
        for (std::size_t i = 0; i < nats.size(); ++i)
            ccsv += fmt(nats[i]) + "," + fmt(curve.mean[i]) + "," + fmt(curve.sd_of_mean[i]) +
                    "\n";
        const fs::path cpath = out_dir / "igt_curve.csv";
        write_file(cpath, ccsv);
        write_meta(cpath, cfg, "analyze-igt");
    }
    return 0;
}

int cmd_analyze_horizon(const RunConfig& cfg) {
    const fs::path out_dir(cfg.io.output_dir);
    fs::create_directories(out_dir);
    const auto ladder = load_checkpoints(cfg);
    const Stream root(cfg.seed);

    std::vector<ExplorationRecord> records;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto& ckpt = ladder[i];
        if (ckpt.task != TaskKind::Horizon)
            throw ConfigError("analyze-horizon: checkpoint " + std::to_string(i) +
                              " is not a horizon model");
        const ChoiceDataset ds =
            simulate_dataset(ckpt, TaskKind::Horizon, 1, cfg.analysis.n_games,
                             fork(root, Purpose::Simulate, i));
        const double covariate = std::log(std::max(ckpt.achieved_nats, 1e-6));
        for (const auto& game : ds.all_games()) {
            ExplorationRecord rec = classify_exploration(game);
            rec.covariate = covariate;
            records.push_back(rec);
        }
    }

    const auto rows = exploration_rates(records);
    std::string csv = "log_nats,horizon,directed_rate,random_rate\n";
    for (const auto& row : rows)
        csv += fmt(row.covariate) + "," + std::to_string(row.horizon) + "," +
               fmt(row.directed_rate) + "," + fmt(row.random_rate) + "\n";
    const fs::path path = out_dir / "horizon.csv";
    write_file(path, csv);
    write_meta(path, cfg, "analyze-horizon");

    const HorizonRegressionResult reg = horizon_regression_rates(rows);
    auto eff = [](const EffectStat& e) {
        return json{{"F", e.f}, {"p", e.p}, {"eta_sq", e.eta_sq}};
    };
    json out;
    out["config_hash"] = config_hash(cfg);
    out["seed"] = cfg.seed;
    out["directed"] = {{"covariate", eff(reg.directed.covariate)},
                       {"horizon", eff(reg.directed.horizon)},
                       {"interaction", eff(reg.directed.interaction)},
                       {"interaction_sign", reg.directed.interaction_sign},
                       {"df_resid", reg.directed.df_resid}};
    out["random"] = {{"covariate", eff(reg.random.covariate)},
                     {"horizon", eff(reg.random.horizon)},
                     {"interaction", eff(reg.random.interaction)},
                     {"interaction_sign", reg.random.interaction_sign},
                     {"df_resid", reg.random.df_resid}};
    const fs::path rpath = out_dir / "regression.json";
    write_file(rpath, out.dump(2) + "\n");
    write_meta(rpath, cfg, "analyze-horizon");
    return 0;
}

int cmd_export_plots(const RunConfig& cfg) {
    const fs::path out_dir(cfg.io.output_dir);
    fs::create_directories(out_dir);
    const auto ladder = load_checkpoints(cfg);
    const Stream root(cfg.seed);

    const auto trajectory = coefficient_trajectory(ladder, cfg.analysis.n_subjects,
                                                   cfg.analysis.n_games,
                                                   fork(root, Purpose::Simulate));
    std::string csv = "nats,w1,w2,w3\n";
    for (const auto& row : trajectory)
        csv += fmt(row.nats) + "," + fmt(row.w1) + "," + fmt(row.w2) + "," + fmt(row.w3) + "\n";
    const fs::path tpath = out_dir / "trajectory.csv";
    write_file(tpath, csv);
    write_meta(tpath, cfg, "export-plots");

    // Coefficient vectors for external embedding: one row per model, plus
    // one per subject when a dataset is supplied.
    std::string ecsv = "source,id,w1,w2,w3\n";
    for (std::size_t i = 0; i < trajectory.size(); ++i)
        ecsv += "model," + c_tag(trajectory[i].c_target) + "," + fmt(trajectory[i].w1) + "," +
                fmt(trajectory[i].w2) + "," + fmt(trajectory[i].w3) + "\n";
    if (!cfg.io.dataset.empty()) {
        const ChoiceDataset ds = load_dataset(cfg, 2);
        for (int s = 0; s < ds.n_subjects(); ++s) {
            const ProbitFit fit =
                fit_probit_newton(ds.games_of(s), ChoiceModel::Hybrid, FitContext::gaussian2());
            ecsv += "subject," + std::to_string(ds.subject_id(s)) + "," + fmt(fit.w[0]) + "," +
                    fmt(fit.w[1]) + "," + fmt(fit.w[2]) + "\n";
        }
    }
    const fs::path epath = out_dir / "coefficients_for_embedding.csv";
    write_file(epath, ecsv);
    write_meta(epath, cfg, "export-plots");
    return 0;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg) {
    try {
        validate_config(cfg);
        if (command == "train") return cmd_train(cfg);
        if (command == "simulate") return cmd_simulate(cfg);
        if (command == "fit") return cmd_fit(cfg);
        if (command == "compare") return cmd_compare(cfg);
        if (command == "analyze-igt") return cmd_analyze_igt(cfg);
        if (command == "analyze-horizon") return cmd_analyze_horizon(cfg);
        if (command == "export-plots") return cmd_export_plots(cfg);
        throw ConfigError("unknown command: " + command);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace rrl
