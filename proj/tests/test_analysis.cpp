#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rrl/analysis.hpp"
#include "rrl/errors.hpp"
#include "rrl/mathx.hpp"

using namespace rrl;

namespace {

Checkpoint zero_weight_checkpoint(TaskKind task) {
    Checkpoint c;
    c.task = task;
    NetworkShape net;
    net.arms = (task == TaskKind::IgtTrain || task == TaskKind::IgtCanonical) ? 4 : 2;
    net.horizon_cue = (task == TaskKind::Horizon);
    net.hidden_dim = 8;
    c.lambda = make_encoding(net);
    for (double& lv : c.lambda.log_var) lv = -2000.0;  // weights exactly 0: uniform policy
    c.reward_scale = default_reward_scale(task);
    c.discount = default_discount(task);
    c.c_nats = 1.0;
    c.achieved_nats = description_length(c.lambda);
    return c;
}

}  // namespace

TEST_CASE("simulate_dataset") {
    const Checkpoint uniform = zero_weight_checkpoint(TaskKind::Gaussian2);
    const Stream root(21);

    SUBCASE("uniform policy picks each arm about half the time") {
        const ChoiceDataset ds =
            simulate_dataset(uniform, TaskKind::Gaussian2, 10, 100, fork(root, Purpose::Simulate));
        CHECK(ds.n_rows() == 10000);
        double picks0 = 0.0;
        for (const auto& r : ds.rows()) picks0 += (r.action == 0) ? 1.0 : 0.0;
        const double freq = picks0 / 10000.0;
        CHECK(freq > 0.48);
        CHECK(freq < 0.52);
    }

    SUBCASE("fixed seed gives identical bytes") {
        const ChoiceDataset a =
            simulate_dataset(uniform, TaskKind::Gaussian2, 2, 5, fork(root, Purpose::Simulate));
        const ChoiceDataset b =
            simulate_dataset(uniform, TaskKind::Gaussian2, 2, 5, fork(root, Purpose::Simulate));
        CHECK(choice_csv_string(a) == choice_csv_string(b));
    }

    SUBCASE("horizon games carry forced trials and the condition tag") {
        const Checkpoint h = zero_weight_checkpoint(TaskKind::Horizon);
        const ChoiceDataset ds =
            simulate_dataset(h, TaskKind::Horizon, 1, 50, fork(root, Purpose::Simulate, 3));
        for (const auto& game : ds.all_games()) {
            CHECK((game.trials == 5 || game.trials == 10));
            const std::string& cond = game[0].condition;
            CHECK((cond == "h1" || cond == "h6"));
            CHECK(game.trials == (cond == "h6" ? 10 : 5));
        }
    }
}

TEST_CASE("igt_proportions") {
    const Checkpoint uniform = zero_weight_checkpoint(TaskKind::IgtTrain);
    const Stream root(5);
    const auto prop = igt_proportions(uniform, 100, fork(root, Purpose::Simulate));
    CHECK(prop.p_low + prop.p_high == 1.0);
    CHECK(prop.p_low > 0.48);
    CHECK(prop.p_low < 0.52);

    const Checkpoint two_armed = zero_weight_checkpoint(TaskKind::Gaussian2);
    CHECK_THROWS_AS(igt_proportions(two_armed, 10, root), std::invalid_argument);
}

namespace {

GameView make_game(std::vector<ChoiceRow>& store, const std::vector<int>& actions,
                   const std::vector<double>& rewards) {
    store.clear();
    for (std::size_t t = 0; t < actions.size(); ++t) {
        ChoiceRow r;
        r.trial = static_cast<int>(t);
        r.action = actions[t];
        r.reward = rewards[t];
        store.push_back(r);
    }
    return GameView{store.data(), store.size()};
}

}  // namespace

TEST_CASE("classify_exploration") {
    std::vector<ChoiceRow> store;

    SUBCASE("unequal [1,3]: choosing the once-observed arm is directed") {
        const auto game = make_game(store, {0, 1, 1, 1, 0}, {50, 55, 52, 58, 0});
        const auto rec = classify_exploration(game);
        CHECK_FALSE(rec.equal_info);
        REQUIRE(rec.directed.has_value());
        CHECK(*rec.directed);
        CHECK_FALSE(rec.random_choice.has_value());
        CHECK(rec.horizon == 1);
    }

    SUBCASE("unequal [3,1]: choosing the thrice-observed arm is not directed") {
        const auto game = make_game(store, {0, 0, 0, 1, 0}, {50, 55, 52, 58, 0});
        const auto rec = classify_exploration(game);
        REQUIRE(rec.directed.has_value());
        CHECK_FALSE(*rec.directed);
    }

    SUBCASE("equal [2,2]: choosing the higher-mean arm is not random") {
        const auto game = make_game(store, {0, 1, 0, 1, 0, 1}, {60, 40, 58, 44, 0, 0});
        const auto rec = classify_exploration(game);
        CHECK(rec.equal_info);
        REQUIRE(rec.random_choice.has_value());
        CHECK_FALSE(*rec.random_choice);
        CHECK_FALSE(rec.directed.has_value());
        CHECK(rec.horizon == 2);
    }

    SUBCASE("equal [2,2]: choosing the lower-mean arm is random") {
        const auto game = make_game(store, {0, 1, 0, 1, 1}, {60, 40, 58, 44, 0});
        const auto rec = classify_exploration(game);
        REQUIRE(rec.random_choice.has_value());
        CHECK(*rec.random_choice);
    }

    SUBCASE("ties in sample means are not random exploration") {
        const auto game = make_game(store, {0, 1, 0, 1, 1}, {50, 50, 50, 50, 0});
        const auto rec = classify_exploration(game);
        REQUIRE(rec.random_choice.has_value());
        CHECK_FALSE(*rec.random_choice);
    }

    SUBCASE("malformed forced history is rejected") {
        const auto game = make_game(store, {0, 0, 0, 0, 1}, {1, 2, 3, 4, 5});
        CHECK_THROWS_AS(classify_exploration(game), DataError);
        const auto small_game = make_game(store, {0, 1}, {1, 2});
        CHECK_THROWS_AS(classify_exploration(small_game), DataError);
    }
}

TEST_CASE("horizon_regression") {
    SUBCASE("planted interaction is detected") {
        Stream rng(404);
        std::vector<RateRow> rows;
        const double covs[] = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
        for (double cv : covs)
            for (int h : {1, 6}) {
                const double h01 = (h == 6) ? 1.0 : 0.0;
                RateRow row;
                row.covariate = cv;
                row.horizon = h;
                row.directed_rate = 0.3 + 0.1 * cv * h01 + rng.normal(0.0, 0.01);
                row.random_rate = 0.2 + rng.normal(0.0, 0.01);
                rows.push_back(row);
            }
        const auto res = horizon_regression_rates(rows);
        CHECK(res.directed.interaction.p < 0.001);
        CHECK(res.directed.interaction_sign == 1);
        CHECK(res.random.interaction.p > 0.1);
        CHECK(res.directed.interaction.eta_sq >= 0.0);
        CHECK(res.directed.interaction.eta_sq <= 1.0);
        CHECK(res.random.covariate.eta_sq >= 0.0);
        CHECK(res.random.covariate.eta_sq <= 1.0);
    }

    SUBCASE("null covariate p-values are uniform (KS over 200 replicates)") {
        Stream rng(1234);
        std::vector<double> pvals;
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<RateRow> rows;
            for (double cv : {1.0, 2.0, 3.0, 4.0})
                for (int h : {1, 6}) {
                    RateRow row;
                    row.covariate = cv;
                    row.horizon = h;
                    row.directed_rate = 0.5 + rng.normal(0.0, 0.05);
                    row.random_rate = 0.5 + rng.normal(0.0, 0.05);
                    rows.push_back(row);
                }
            pvals.push_back(horizon_regression_rates(rows).directed.covariate.p);
        }
        const auto ks = ks_uniform(pvals);
        CHECK(ks.p > 0.01);
    }

    SUBCASE("pre-conditions enforced") {
        std::vector<RateRow> rows = {{1.0, 1, 0.5, 0.5}, {2.0, 1, 0.5, 0.5},
                                     {3.0, 1, 0.5, 0.5}, {4.0, 1, 0.5, 0.5},
                                     {5.0, 1, 0.5, 0.5}};
        CHECK_THROWS_AS(horizon_regression_rates(rows), std::invalid_argument);
    }

    SUBCASE("record aggregation produces one row per (covariate, horizon)") {
        std::vector<ExplorationRecord> records;
        for (int i = 0; i < 10; ++i) {
            ExplorationRecord r;
            r.equal_info = (i % 2 == 0);
            r.horizon = (i % 4 < 2) ? 1 : 6;
            if (r.equal_info)
                r.random_choice = (i % 3 == 0);
            else
                r.directed = (i % 3 == 1);
            r.covariate = 2.0;
            records.push_back(r);
        }
        const auto rows = exploration_rates(records);
        CHECK(rows.size() == 2);
        for (const auto& row : rows) {
            CHECK(row.directed_rate >= 0.0);
            CHECK(row.directed_rate <= 1.0);
            CHECK(row.random_rate >= 0.0);
            CHECK(row.random_rate <= 1.0);
        }
    }
}

TEST_CASE("poly_regression_summary") {
    SUBCASE("noiseless quadratic is recovered closely") {
        std::vector<double> xs, ys;
        for (int i = 0; i < 30; ++i) {
            const double x = 0.2 * i;
            xs.push_back(x);
            ys.push_back(2.0 - 1.5 * x + 0.25 * x * x);
        }
        const auto curve = poly_regression_summary(xs, ys, 2, xs);
        for (std::size_t i = 0; i < xs.size(); ++i)
            CHECK(curve.mean[i] == doctest::Approx(ys[i]).epsilon(2e-3));
    }

    SUBCASE("sd of the mean shrinks as points are replicated") {
        std::vector<double> xs = {0.0, 1.0, 2.0, 3.0, 4.0};
        std::vector<double> ys = {0.1, 0.9, 2.1, 2.9, 4.1};
        const std::vector<double> query = {2.0};
        const auto once = poly_regression_summary(xs, ys, 1, query);
        std::vector<double> xs4, ys4;
        for (int rep = 0; rep < 4; ++rep) {
            xs4.insert(xs4.end(), xs.begin(), xs.end());
            ys4.insert(ys4.end(), ys.begin(), ys.end());
        }
        const auto four = poly_regression_summary(xs4, ys4, 1, query);
        CHECK(four.sd_of_mean[0] < once.sd_of_mean[0]);
    }

    SUBCASE("constant data gives a flat curve at that constant") {
        std::vector<double> xs = {0.0, 1.0, 2.0, 3.0};
        std::vector<double> ys = {5.0, 5.0, 5.0, 5.0};
        const std::vector<double> query = {0.5, 1.5, 2.5};
        const auto curve = poly_regression_summary(xs, ys, 1, query);
        for (double m : curve.mean) CHECK(m == doctest::Approx(5.0).epsilon(1e-2));
    }

    SUBCASE("degenerate designs are rejected") {
        std::vector<double> xs = {1.0, 1.0, 1.0, 1.0};
        std::vector<double> ys = {1.0, 2.0, 3.0, 4.0};
        CHECK_THROWS_AS(poly_regression_summary(xs, ys, 1, xs), std::invalid_argument);
        std::vector<double> xs2 = {1.0, 2.0};
        std::vector<double> ys2 = {1.0, 2.0};
        CHECK_THROWS_AS(poly_regression_summary(xs2, ys2, 1, xs2), std::invalid_argument);
    }
}
