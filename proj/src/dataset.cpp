#include "rrl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "rrl/errors.hpp"

namespace rrl {

namespace {

std::string row_ctx(std::size_t line) { return "line " + std::to_string(line); }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

int parse_int(const std::string& s, const char* field, std::size_t line) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw DataError("ingest: bad " + std::string(field) + " '" + s + "' at " + row_ctx(line));
    return v;
}

double parse_double(const std::string& s, const char* field, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw DataError("ingest: bad " + std::string(field) + " '" + s + "' at " + row_ctx(line));
    return v;
}

void format_double(std::string& out, double v) {
    if (std::isnan(v)) return;  // optional field left empty
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, p);
}

}  // namespace

ChoiceDataset ChoiceDataset::from_rows(std::vector<ChoiceRow> rows, int arms) {
    if (rows.empty()) throw DataError("dataset: no rows");
    ChoiceDataset ds;
    ds.arms_ = arms;
    ds.rows_ = std::move(rows);

    std::size_t i = 0;
    int last_subject = std::numeric_limits<int>::min();
    std::vector<std::pair<int, int>> seen_games;  // (subject, game) in order
    while (i < ds.rows_.size()) {
        const int subject = ds.rows_[i].subject;
        const int game = ds.rows_[i].game;
        for (const auto& sg : seen_games)
            if (sg.first == subject && sg.second == game)
                throw DataError("dataset: trials of subject " + std::to_string(subject) +
                                " game " + std::to_string(game) + " are not contiguous");
        seen_games.emplace_back(subject, game);

        if (subject != last_subject) {
            if (!ds.subject_ids_.empty() &&
                std::find(ds.subject_ids_.begin(), ds.subject_ids_.end(), subject) !=
                    ds.subject_ids_.end())
                throw DataError("dataset: subject " + std::to_string(subject) +
                                " rows are not contiguous");
            ds.subject_ids_.push_back(subject);
            ds.subject_first_game_.push_back(ds.games_.size());
            last_subject = subject;
        }

        std::size_t j = i;
        while (j < ds.rows_.size() && ds.rows_[j].subject == subject &&
               ds.rows_[j].game == game) {
            const auto& r = ds.rows_[j];
            const int expected_trial = static_cast<int>(j - i);
            if (r.trial != expected_trial)
                throw DataError("dataset: subject " + std::to_string(subject) + " game " +
                                std::to_string(game) + " expected trial " +
                                std::to_string(expected_trial) + ", got " +
                                std::to_string(r.trial));
            if (r.action < 0 || r.action >= arms)
                throw DataError("dataset: action " + std::to_string(r.action) +
                                " out of range for " + std::to_string(arms) +
                                " arms (subject " + std::to_string(subject) + ", game " +
                                std::to_string(game) + ", trial " + std::to_string(r.trial) +
                                ")");
            if (!std::isfinite(r.reward))
                throw DataError("dataset: non-finite reward (subject " +
                                std::to_string(subject) + ", game " + std::to_string(game) +
                                ", trial " + std::to_string(r.trial) + ")");
            ++j;
        }
        ds.games_.push_back({ds.rows_.data() + i, j - i});
        i = j;
    }
    ds.subject_first_game_.push_back(ds.games_.size());

    // Rectangularity.
    ds.trials_per_game_ = static_cast<int>(ds.games_.front().trials);
    for (const auto& g : ds.games_)
        if (static_cast<int>(g.trials) != ds.trials_per_game_) {
            ds.trials_per_game_ = -1;
            break;
        }
    ds.games_per_subject_ =
        static_cast<int>(ds.subject_first_game_[1] - ds.subject_first_game_[0]);
    for (int s = 0; s + 1 < static_cast<int>(ds.subject_first_game_.size()); ++s) {
        const auto n = ds.subject_first_game_[static_cast<std::size_t>(s) + 1] -
                       ds.subject_first_game_[static_cast<std::size_t>(s)];
        if (static_cast<int>(n) != ds.games_per_subject_) {
            ds.games_per_subject_ = -1;
            break;
        }
    }
    return ds;
}

std::span<const GameView> ChoiceDataset::games_of(int subject_idx) const {
    const auto s = static_cast<std::size_t>(subject_idx);
    return {games_.data() + subject_first_game_[s],
            subject_first_game_[s + 1] - subject_first_game_[s]};
}

ChoiceDataset ingest(const std::string& path, int arms) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("ingest: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("ingest: no rows in " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != ChoiceDataset::kHeader)
        throw DataError("ingest: bad header '" + line + "', expected '" +
                        ChoiceDataset::kHeader + "'");

    std::vector<ChoiceRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 8)
            throw DataError("ingest: expected 8 columns, got " +
                            std::to_string(fields.size()) + " at " + row_ctx(line_no));
        ChoiceRow r;
        r.subject = parse_int(fields[0], "subject", line_no);
        r.game = parse_int(fields[1], "game", line_no);
        r.trial = parse_int(fields[2], "trial", line_no);
        r.condition = fields[3];
        r.action = parse_int(fields[4], "action", line_no);
        r.reward = parse_double(fields[5], "reward", line_no);
        if (!fields[6].empty()) r.arm0_mean = parse_double(fields[6], "arm0_mean", line_no);
        if (!fields[7].empty()) r.arm1_mean = parse_double(fields[7], "arm1_mean", line_no);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw DataError("ingest: no rows in " + path);
    return ChoiceDataset::from_rows(std::move(rows), arms);
}

std::string choice_csv_string(const ChoiceDataset& ds) {
    std::string out = ChoiceDataset::kHeader;
    out += '\n';
    for (const auto& r : ds.rows()) {
        out += std::to_string(r.subject);
        out += ',';
        out += std::to_string(r.game);
        out += ',';
        out += std::to_string(r.trial);
        out += ',';
        out += r.condition;
        out += ',';
        out += std::to_string(r.action);
        out += ',';
        format_double(out, r.reward);
        out += ',';
        format_double(out, r.arm0_mean);
        out += ',';
        format_double(out, r.arm1_mean);
        out += '\n';
    }
    return out;
}

void write_choice_csv(const ChoiceDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write: cannot open " + path);
    out << choice_csv_string(ds);
}

}  // namespace rrl
