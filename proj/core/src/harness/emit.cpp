#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taso/error.hpp"
#include "taso/harness.hpp"
#include "taso/numfmt.hpp"

namespace taso::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

std::string run_json(const RunRecord& r) {
    json rows = json::array();
    for (const EpochRow& row : r.rows) {
        rows.push_back({{"epoch", row.epoch},
                        {"lr", format_double(row.lr)},
                        {"train_loss", format_double(row.train_loss)},
                        {"train_acc", format_double(row.train_acc)},
                        {"test_loss", format_double(row.test_loss)},
                        {"test_acc", format_double(row.test_acc)}});
    }
    json j = {{"seed", r.seed}, {"diverged", r.diverged}, {"wall_seconds", r.wall_seconds}, {"rows", rows}};
    j["divergence_epoch"] = r.divergence_epoch ? json(*r.divergence_epoch) : json(nullptr);
    return j.dump(2) + "\n";
}

}  // namespace

std::string run_csv(const RunRecord& record) {
    std::string out(kRunCsvHeader);
    out += '\n';
    for (const EpochRow& r : record.rows) {
        out += std::to_string(r.epoch);
        for (double v : {r.lr, r.train_loss, r.train_acc, r.test_loss, r.test_acc}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

std::vector<EpochRow> parse_run_csv(std::string_view csv) {
    std::vector<EpochRow> rows;
    std::size_t line_no = 0;
    while (!csv.empty()) {
        const std::size_t nl = csv.find('\n');
        std::string_view line = csv.substr(0, nl);
        csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (line_no == 1) {
            if (line != kRunCsvHeader) throw InputError("run CSV header mismatch: '" + std::string(line) + "'");
            continue;
        }
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 6) throw InputError("run CSV line " + std::to_string(line_no) + ": expected 6 fields");
        EpochRow r;
        r.epoch = static_cast<std::size_t>(parse_double(f[0]));
        r.lr = parse_double(f[1]);
        r.train_loss = parse_double(f[2]);
        r.train_acc = parse_double(f[3]);
        r.test_loss = parse_double(f[4]);
        r.test_acc = parse_double(f[5]);
        rows.push_back(r);
    }
    if (line_no == 0) throw InputError("run CSV is empty");
    return rows;
}

void emit(const ExperimentConfig& cfg, const RepeatResult& result, const fs::path& dir) {
    write_file(dir / "config.json", to_json(cfg));
    write_file(dir / "aggregate.json", to_json(result.aggregate));
    for (const RunRecord& r : result.runs) {
        const std::string stem = "seed_" + std::to_string(r.seed);
        write_file(dir / "runs" / (stem + ".csv"), run_csv(r));
        write_file(dir / "runs" / (stem + ".json"), run_json(r));
    }
}

std::string grid_csv(const GridResult& result) {
    std::ostringstream out;
    out << "cell";
    for (const GridAxis& a : result.grid.axes) out << ',' << a.name;
    out << ",test_acc_mean,test_acc_std,test_loss_mean,test_loss_std,diverged,rank\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const GridCell& c = result.cells[i];
        const AggregateRecord& a = c.result.aggregate;
        out << i;
        for (double v : c.values) out << ',' << format_double(v);
        out << ',' << format_double(a.final_test_acc.mean) << ',' << format_double(a.final_test_acc.std) << ','
            << format_double(a.final_test_loss.mean) << ',' << format_double(a.final_test_loss.std) << ','
            << a.diverged_count << ',' << c.rank << '\n';
    }
    return out.str();
}

void emit(const GridResult& result, const fs::path& dir) {
    json axes = json::array();
    for (const GridAxis& a : result.grid.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
    json cells = json::array();
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const GridCell& c = result.cells[i];
        const std::string name = "cell_" + std::to_string(i);
        cells.push_back({{"cell", i}, {"values", c.values}, {"rank", c.rank}, {"dir", "cells/" + name}});
        emit(c.config, c.result, dir / "cells" / name);
    }
    const json j = {{"axes", axes}, {"cells", cells}, {"best", result.best}};
    write_file(dir / "grid.json", j.dump(2) + "\n");
    write_file(dir / "grid.csv", grid_csv(result));
}

}  // namespace taso::harness
