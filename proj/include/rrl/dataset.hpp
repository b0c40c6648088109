#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rrl {

// One row of the canonical choice CSV:
//   subject,game,trial,condition,action,reward,arm0_mean,arm1_mean
// The latent means are optional (NaN when absent, e.g. human data).
struct ChoiceRow {
    int subject = 0;
    int game = 0;
    int trial = 0;
    std::string condition;
    int action = 0;
    double reward = 0.0;
    double arm0_mean = std::numeric_limits<double>::quiet_NaN();
    double arm1_mean = std::numeric_limits<double>::quiet_NaN();
};

// Trials of one game, contiguous in the backing row store.
struct GameView {
    const ChoiceRow* rows = nullptr;
    std::size_t trials = 0;
    const ChoiceRow& operator[](std::size_t t) const { return rows[t]; }
    const ChoiceRow* begin() const { return rows; }
    const ChoiceRow* end() const { return rows + trials; }
};

// Subjects x games x trials table of actions and rewards; the common
// currency of fitting and analysis.
class ChoiceDataset {
public:
    static constexpr const char* kHeader =
        "subject,game,trial,condition,action,reward,arm0_mean,arm1_mean";

    // Takes rows already ordered subject -> game -> trial; validates
    // contiguity, actions and rewards.  Throws DataError with row context.
    static ChoiceDataset from_rows(std::vector<ChoiceRow> rows, int arms);

    int arms() const { return arms_; }
    int n_subjects() const { return static_cast<int>(subject_ids_.size()); }
    int subject_id(int idx) const { return subject_ids_[static_cast<std::size_t>(idx)]; }
    std::size_t n_rows() const { return rows_.size(); }

    // Games of the idx-th subject (order of appearance).
    std::span<const GameView> games_of(int subject_idx) const;
    std::span<const GameView> all_games() const { return games_; }

    // Games per subject and trials per game when the table is rectangular;
    // -1 otherwise.
    int games_per_subject() const { return games_per_subject_; }
    int trials_per_game() const { return trials_per_game_; }

    const std::vector<ChoiceRow>& rows() const { return rows_; }

private:
    std::vector<ChoiceRow> rows_;
    std::vector<GameView> games_;
    std::vector<int> subject_ids_;
    std::vector<std::size_t> subject_first_game_;  // size n_subjects + 1
    int arms_ = 2;
    int games_per_subject_ = -1;
    int trials_per_game_ = -1;
};

// Reads and validates a canonical CSV file.  Schema violations raise
// DataError naming the offending line.
ChoiceDataset ingest(const std::string& path, int arms = 2);

// Writes the canonical CSV (UTF-8, LF, shortest round-trip numbers).
void write_choice_csv(const ChoiceDataset& ds, const std::string& path);
std::string choice_csv_string(const ChoiceDataset& ds);

}  // namespace rrl
