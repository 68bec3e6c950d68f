#include <cmath>
#include <limits>

#include <json.hpp>

#include "taso/error.hpp"
#include "taso/harness.hpp"

namespace taso::harness {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }
bool same(const Stat& a, const Stat& b) { return same(a.mean, b.mean) && same(a.std, b.std); }

// JSON has no NaN; null stands in for it.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json stat_json(const Stat& s) { return {{"mean", number(s.mean)}, {"std", number(s.std)}}; }
Stat parse_stat(const json& j) { return {number(j.at("mean")), number(j.at("std"))}; }

json row_json(const EpochRow& r) {
    return {{"epoch", r.epoch},           {"lr", number(r.lr)},
            {"train_loss", number(r.train_loss)}, {"train_acc", number(r.train_acc)},
            {"test_loss", number(r.test_loss)},   {"test_acc", number(r.test_acc)}};
}

EpochRow parse_row(const json& j) {
    return {j.at("epoch").get<std::size_t>(), number(j.at("lr")),       number(j.at("train_loss")),
            number(j.at("train_acc")),        number(j.at("test_loss")), number(j.at("test_acc"))};
}

}  // namespace

// Two passes over the values shifted by the first one.
Stat mean_std(const std::vector<double>& values) {
    if (values.empty()) return {kNaN, kNaN};
    const double origin = values.front();
    double sum = 0.0;
    for (double v : values) sum += v - origin;
    const double shift = sum / double(values.size());
    if (values.size() == 1) return {origin, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - origin - shift) * (v - origin - shift);
    return {origin + shift, std::sqrt(ss / double(values.size() - 1))};
}

bool operator==(const AggregateRecord& a, const AggregateRecord& b) {
    if (a.runs.size() != b.runs.size() || a.curves.size() != b.curves.size()) return false;
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        const RunSummary &x = a.runs[i], &y = b.runs[i];
        const EpochRow &p = x.final_row, &q = y.final_row;
        if (x.seed != y.seed || x.diverged != y.diverged || x.divergence_epoch != y.divergence_epoch ||
            p.epoch != q.epoch || !same(p.lr, q.lr) || !same(p.train_loss, q.train_loss) ||
            !same(p.train_acc, q.train_acc) || !same(p.test_loss, q.test_loss) || !same(p.test_acc, q.test_acc)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.curves.size(); ++i) {
        const EpochAggregate &x = a.curves[i], &y = b.curves[i];
        if (x.epoch != y.epoch || !same(x.lr, y.lr) || !same(x.train_loss, y.train_loss) ||
            !same(x.train_acc, y.train_acc) || !same(x.test_loss, y.test_loss) || !same(x.test_acc, y.test_acc)) {
            return false;
        }
    }
    return a.diverged_count == b.diverged_count && same(a.final_train_loss, b.final_train_loss) &&
           same(a.final_train_acc, b.final_train_acc) && same(a.final_test_loss, b.final_test_loss) &&
           same(a.final_test_acc, b.final_test_acc);
}

AggregateRecord aggregate(const std::vector<RunRecord>& runs) {
    AggregateRecord out;
    std::vector<const RunRecord*> alive;
    for (const RunRecord& r : runs) {
        RunSummary s{r.seed, r.diverged, r.divergence_epoch, {}};
        if (!r.rows.empty()) s.final_row = r.final_row();
        out.runs.push_back(s);
        if (r.diverged || r.rows.empty()) {
            ++out.diverged_count;
        } else {
            alive.push_back(&r);
        }
    }

    auto collect = [&](auto field, std::size_t row) {
        std::vector<double> v;
        for (const RunRecord* r : alive) v.push_back(r->rows[row].*field);
        return mean_std(v);
    };

    if (alive.empty()) {
        out.final_train_loss = out.final_train_acc = out.final_test_loss = out.final_test_acc = {kNaN, kNaN};
        return out;
    }
    const std::size_t epochs = alive.front()->rows.size();
    for (const RunRecord* r : alive) {
        if (r->rows.size() != epochs) throw ContractError("runs being aggregated have different epoch counts");
    }
    out.final_train_loss = collect(&EpochRow::train_loss, epochs - 1);
    out.final_train_acc = collect(&EpochRow::train_acc, epochs - 1);
    out.final_test_loss = collect(&EpochRow::test_loss, epochs - 1);
    out.final_test_acc = collect(&EpochRow::test_acc, epochs - 1);
    for (std::size_t e = 0; e < epochs; ++e) {
        out.curves.push_back({alive.front()->rows[e].epoch, alive.front()->rows[e].lr,
                              collect(&EpochRow::train_loss, e), collect(&EpochRow::train_acc, e),
                              collect(&EpochRow::test_loss, e), collect(&EpochRow::test_acc, e)});
    }
    return out;
}

std::string to_json(const AggregateRecord& record) {
    json runs = json::array();
    for (const RunSummary& r : record.runs) {
        json j = {{"seed", r.seed}, {"diverged", r.diverged}, {"final", row_json(r.final_row)}};
        j["divergence_epoch"] = r.divergence_epoch ? json(*r.divergence_epoch) : json(nullptr);
        runs.push_back(j);
    }
    json curves = json::array();
    for (const EpochAggregate& c : record.curves) {
        curves.push_back({{"epoch", c.epoch},
                          {"lr", number(c.lr)},
                          {"train_loss", stat_json(c.train_loss)},
                          {"train_acc", stat_json(c.train_acc)},
                          {"test_loss", stat_json(c.test_loss)},
                          {"test_acc", stat_json(c.test_acc)}});
    }
    json j = {{"runs", runs},
              {"diverged_count", record.diverged_count},
              {"final_train_loss", stat_json(record.final_train_loss)},
              {"final_train_acc", stat_json(record.final_train_acc)},
              {"final_test_loss", stat_json(record.final_test_loss)},
              {"final_test_acc", stat_json(record.final_test_acc)},
              {"curves", curves}};
    return j.dump(2) + "\n";
}

AggregateRecord parse_aggregate(std::string_view text) {
    try {
        const json j = json::parse(text);
        AggregateRecord out;
        for (const json& r : j.at("runs")) {
            RunSummary s;
            s.seed = r.at("seed").get<std::uint64_t>();
            s.diverged = r.at("diverged").get<bool>();
            if (!r.at("divergence_epoch").is_null()) s.divergence_epoch = r.at("divergence_epoch").get<std::size_t>();
            s.final_row = parse_row(r.at("final"));
            out.runs.push_back(s);
        }
        out.diverged_count = j.at("diverged_count").get<std::size_t>();
        out.final_train_loss = parse_stat(j.at("final_train_loss"));
        out.final_train_acc = parse_stat(j.at("final_train_acc"));
        out.final_test_loss = parse_stat(j.at("final_test_loss"));
        out.final_test_acc = parse_stat(j.at("final_test_acc"));
        for (const json& c : j.at("curves")) {
            out.curves.push_back({c.at("epoch").get<std::size_t>(), number(c.at("lr")), parse_stat(c.at("train_loss")),
                                  parse_stat(c.at("train_acc")), parse_stat(c.at("test_loss")),
                                  parse_stat(c.at("test_acc"))});
        }
        return out;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed aggregate JSON: ") + e.what());
    }
}

}  // namespace taso::harness
