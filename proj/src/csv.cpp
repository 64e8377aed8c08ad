#include "simba/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "simba/config.hpp"
#include "simba/errors.hpp"

namespace simba {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

bool read_number(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (begin != end && *begin == '+') ++begin;
    if (begin == end) return false;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

// Columns named <prefix><k>, ordered by k.
std::vector<std::string> numbered(const std::vector<std::string>& header, const std::string& prefix) {
    std::vector<std::pair<long, std::string>> found;
    for (const std::string& h : header) {
        if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) continue;
        const std::string rest = h.substr(prefix.size());
        if (!std::all_of(rest.begin(), rest.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
        found.emplace_back(std::stol(rest), h);
    }
    std::sort(found.begin(), found.end());
    std::vector<std::string> names;
    for (auto& f : found) names.push_back(f.second);
    return names;
}

std::vector<int> positions(const CsvTable& table, const std::vector<std::string>& names) {
    std::vector<int> out;
    for (const std::string& n : names) {
        const int c = table.column(n);
        if (c < 0) throw ParseError(at_line(1) + "missing column '" + n + "'", 1);
        out.push_back(c);
    }
    return out;
}

struct Row {
    double t;
    std::size_t line;
    std::size_t index;
};

}  // namespace

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv_table(std::istream& in) {
    CsvTable table;
    std::string raw;
    std::size_t line = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty() || text[0] == '#') continue;
        auto cells = split_cells(text);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ParseError(at_line(line) + "expected " + std::to_string(table.header.size()) + " cells, got " +
                                 std::to_string(cells.size()),
                             line);
        }
        table.rows.push_back(std::move(cells));
        table.lines.push_back(line);
    }
    if (!have_header) throw ParseError("empty file: no header", 0);
    return table;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return read_csv_table(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

std::vector<Trajectory> load_csv(std::istream& in, const std::string& default_id, const CsvSchema& schema) {
    const CsvTable table = read_csv_table(in);

    const auto input_names = schema.inputs.empty() ? numbered(table.header, "u") : schema.inputs;
    const auto output_names = schema.outputs.empty() ? numbered(table.header, "y") : schema.outputs;
    if (output_names.empty() && schema.outputs_required) throw ParseError(at_line(1) + "no output columns (y1, y2, ...)", 1);
    auto mask_names = schema.masks.empty() ? numbered(table.header, "m") : schema.masks;
    const auto in_cols = positions(table, input_names);
    const auto out_cols = positions(table, output_names);
    std::vector<int> mask_cols;
    int shared_mask = -1;
    if (!mask_names.empty()) {
        if (mask_names.size() != output_names.size()) {
            throw ParseError(at_line(1) + "expected one mask column per output", 1);
        }
        mask_cols = positions(table, mask_names);
    } else {
        shared_mask = table.column("mask");
    }
    const int t_col = table.column(schema.time_column);
    const int id_col = schema.id_column.empty() ? -1 : table.column(schema.id_column);

    // Group rows by trajectory id in order of first appearance.
    std::vector<std::string> order;
    std::map<std::string, std::vector<Row>> groups;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::size_t line = table.lines[r];
        double t = static_cast<double>(r);
        if (t_col >= 0 && (!read_number(cells[static_cast<std::size_t>(t_col)], t) || !std::isfinite(t))) {
            throw ParseError(at_line(line) + "time '" + cells[static_cast<std::size_t>(t_col)] + "' is not a number",
                             line);
        }
        const std::string id = id_col >= 0 ? cells[static_cast<std::size_t>(id_col)] : default_id;
        if (id.empty()) throw ParseError(at_line(line) + "empty trajectory id", line);
        auto [it, fresh] = groups.try_emplace(id);
        if (fresh) order.push_back(id);
        it->second.push_back(Row{t, line, r});
    }
    if (order.empty()) throw ParseError("no data rows", 0);

    const Index m = static_cast<Index>(in_cols.size());
    const Index p = static_cast<Index>(out_cols.size());
    std::vector<Trajectory> out;
    for (const std::string& id : order) {
        auto& rows = groups[id];
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
        for (std::size_t k = 1; k < rows.size(); ++k) {
            if (rows[k].t == rows[k - 1].t) {
                const std::size_t line = std::max(rows[k].line, rows[k - 1].line);
                throw ParseError(at_line(line) + "duplicate timestamp " + format_double(rows[k].t), line);
            }
        }
        const Index l = static_cast<Index>(rows.size());
        Trajectory t;
        t.id = id;
        t.inputs.resize(l, m);
        t.outputs.resize(l, p);
        t.mask = Mask::Ones(l, p);
        for (Index k = 0; k < l; ++k) {
            const Row& row = rows[static_cast<std::size_t>(k)];
            const auto& cells = table.rows[row.index];
            for (Index j = 0; j < m; ++j) {
                const std::string& cell = cells[static_cast<std::size_t>(in_cols[static_cast<std::size_t>(j)])];
                double v = 0.0;
                if (!read_number(cell, v) || !std::isfinite(v)) {
                    throw ParseError(at_line(row.line) + "input '" + cell + "' is not a finite number", row.line);
                }
                t.inputs(k, j) = v;
            }
            for (Index j = 0; j < p; ++j) {
                double v = 0.0;
                const std::string& cell = cells[static_cast<std::size_t>(out_cols[static_cast<std::size_t>(j)])];
                bool observed = read_number(cell, v) && std::isfinite(v);
                int mask_col = shared_mask;
                if (!mask_cols.empty()) mask_col = mask_cols[static_cast<std::size_t>(j)];
                if (mask_col >= 0) {
                    const std::string& mc = cells[static_cast<std::size_t>(mask_col)];
                    if (mc == "0") {
                        observed = false;
                    } else if (mc != "1" && !mc.empty()) {
                        throw ParseError(at_line(row.line) + "mask '" + mc + "' must be 0 or 1", row.line);
                    }
                }
                t.outputs(k, j) = observed ? v : std::numeric_limits<double>::quiet_NaN();
                t.mask(k, j) = observed ? 1 : 0;
            }
        }
        t.t0 = rows.front().t;
        if (l > 1) t.dt = (rows.back().t - rows.front().t) / static_cast<double>(l - 1);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<Trajectory> load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ConfigError("no .csv files in " + path.string());
    } else {
        files.push_back(path);
    }
    std::vector<Trajectory> out;
    for (const fs::path& f : files) {
        std::ifstream in(f);
        if (!in) throw ConfigError("cannot open " + f.string());
        try {
            auto part = load_csv(in, f.stem().string(), schema);
            for (auto& t : part) out.push_back(std::move(t));
        } catch (const ParseError& e) {
            throw ParseError(f.string() + ": " + e.what(), e.line());
        }
    }
    return out;
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw ContractError("format_double: buffer too small");
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Trajectory& t) {
    out << 't';
    for (Index j = 0; j < t.input_dim(); ++j) out << ",u" << j + 1;
    for (Index j = 0; j < t.output_dim(); ++j) out << ",y" << j + 1;
    out << '\n';
    for (Index k = 0; k < t.length(); ++k) {
        out << format_double(t.t0 + static_cast<double>(k) * t.dt);
        for (Index j = 0; j < t.input_dim(); ++j) out << ',' << format_double(t.inputs(k, j));
        for (Index j = 0; j < t.output_dim(); ++j) {
            out << ',';
            if (t.mask(k, j)) out << format_double(t.outputs(k, j));
        }
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const Trajectory& t) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_csv(out, t);
}

Dataset load_manifest(const std::filesystem::path& path, const CsvSchema& schema) {
    const auto entries = read_key_values(path);
    const auto base = path.parent_path();
    Dataset ds;
    std::vector<KeyValue> x0_entries;
    for (const KeyValue& kv : entries) {
        if (kv.key.rfind("x0.", 0) == 0) {
            x0_entries.push_back(kv);
            continue;
        }
        Split split;
        try {
            split = parse_split(kv.key);
        } catch (const ConfigError&) {
            throw ConfigError(path.string() + ": line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
        }
        std::filesystem::path target = kv.value;
        if (target.is_relative()) target = base / target;
        for (auto& t : load_csv(target, schema)) ds.add(std::move(t), split);
    }
    for (const KeyValue& kv : x0_entries) {
        const std::string id = kv.key.substr(3);
        if (!ds.split.count(id)) {
            throw ConfigError(path.string() + ": line " + std::to_string(kv.line) + ": no trajectory named '" + id + "'");
        }
        for (auto& t : ds.trajectories) {
            if (t.id == id) t.known_x0 = parse_vector(kv);
        }
    }
    if (ds.trajectories.empty()) throw ConfigError(path.string() + ": manifest lists no data");
    ds.validate();
    return ds;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries,
                    const std::map<std::string, Vector>& known_x0) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (const auto& e : entries) out << split_name(e.split) << " = " << e.file.generic_string() << '\n';
    for (const auto& [id, x0] : known_x0) out << "x0." << id << " = " << format_vector(x0) << '\n';
}

}  // namespace simba
