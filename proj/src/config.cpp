#include "simba/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "simba/csv.hpp"
#include "simba/errors.hpp"

namespace simba {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string where(const KeyValue& kv) { return "line " + std::to_string(kv.line) + ": " + kv.key; }

bool read_double(const std::string& token, double& out) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && begin != end;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

}  // namespace

std::vector<KeyValue> read_key_values(std::istream& in) {
    std::vector<KeyValue> out;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(line) + ": expected key = value", line);
        KeyValue kv{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
        if (kv.key.empty()) throw ParseError("line " + std::to_string(line) + ": empty key", line);
        out.push_back(std::move(kv));
    }
    return out;
}

std::vector<KeyValue> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    return read_key_values(in);
}

double parse_double(const KeyValue& kv) {
    double v = 0.0;
    if (!read_double(kv.value, v)) throw ParseError(where(kv) + ": not a number: '" + kv.value + "'", kv.line);
    return v;
}

long long parse_integer(const KeyValue& kv) {
    long long v = 0;
    const char* end = kv.value.data() + kv.value.size();
    const auto [ptr, ec] = std::from_chars(kv.value.data(), end, v);
    if (ec != std::errc() || ptr != end || kv.value.empty()) {
        throw ParseError(where(kv) + ": not an integer: '" + kv.value + "'", kv.line);
    }
    return v;
}

std::uint64_t parse_seed(const KeyValue& kv) {
    std::uint64_t v = 0;
    const char* end = kv.value.data() + kv.value.size();
    const auto [ptr, ec] = std::from_chars(kv.value.data(), end, v);
    if (ec != std::errc() || ptr != end || kv.value.empty()) {
        throw ParseError(where(kv) + ": seed must be an integer in [0, 2^64): '" + kv.value + "'", kv.line);
    }
    return v;
}

bool parse_bool(const KeyValue& kv) {
    const std::string& v = kv.value;
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ParseError(where(kv) + ": expected true or false, got '" + v + "'", kv.line);
}

Vector parse_vector(const KeyValue& kv) {
    const auto tokens = split_ws(kv.value);
    Vector v(static_cast<Index>(tokens.size()));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!read_double(tokens[i], v(static_cast<Index>(i)))) {
            throw ParseError(where(kv) + ": not a number: '" + tokens[i] + "'", kv.line);
        }
    }
    return v;
}

Matrix parse_matrix(const KeyValue& kv, Index rows, Index cols) {
    Matrix m(rows, cols);
    std::vector<std::string> row_text;
    std::string cur;
    for (char c : kv.value) {
        if (c == ';') {
            row_text.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    row_text.push_back(cur);
    if (rows == 0 || cols == 0) {
        if (!trim(kv.value).empty()) throw ParseError(where(kv) + ": expected an empty matrix", kv.line);
        return m;
    }
    if (static_cast<Index>(row_text.size()) != rows) {
        throw ParseError(where(kv) + ": expected " + std::to_string(rows) + " rows, got " +
                             std::to_string(row_text.size()),
                         kv.line);
    }
    for (Index i = 0; i < rows; ++i) {
        const auto tokens = split_ws(row_text[static_cast<std::size_t>(i)]);
        if (static_cast<Index>(tokens.size()) != cols) {
            throw ParseError(where(kv) + ": row " + std::to_string(i + 1) + " has " + std::to_string(tokens.size()) +
                                 " entries, expected " + std::to_string(cols),
                             kv.line);
        }
        for (Index j = 0; j < cols; ++j) {
            if (!read_double(tokens[static_cast<std::size_t>(j)], m(i, j))) {
                throw ParseError(where(kv) + ": not a number: '" + tokens[static_cast<std::size_t>(j)] + "'", kv.line);
            }
        }
    }
    return m;
}

std::string format_vector(const Vector& v) {
    std::string out;
    for (Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += format_double(v(i));
    }
    return out;
}

std::string format_matrix(const Matrix& m) {
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) {
        if (i) out += "; ";
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out += ' ';
            out += format_double(m(i, j));
        }
    }
    return out;
}

FitSettings parse_fit_settings(const std::vector<KeyValue>& entries) {
    FitSettings s;
    TrainConfig& c = s.train;
    auto as_int = [](const KeyValue& kv) {
        const long long v = parse_integer(kv);
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            throw ParseError(where(kv) + ": out of range", kv.line);
        }
        return static_cast<int>(v);
    };
    auto clip = [](const KeyValue& kv) -> std::optional<double> {
        if (kv.value == "none" || kv.value == "off") return std::nullopt;
        return parse_double(kv);
    };
    // Wraps the name parsers so their ConfigError points at the line.
    auto named = [](const KeyValue& kv, const auto& parse) {
        try {
            return parse(kv.value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(kv.line) + ": " + e.what());
        }
    };

    const std::map<std::string, std::function<void(const KeyValue&)>> handlers{
        {"state_dim", [&](const KeyValue& kv) { c.state_dim = parse_integer(kv); }},
        {"max_epochs", [&](const KeyValue& kv) { c.max_epochs = as_int(kv); }},
        {"batch_size", [&](const KeyValue& kv) { c.batch_size = as_int(kv); }},
        {"learning_rate", [&](const KeyValue& kv) { c.learning_rate = parse_double(kv); }},
        {"init_learning_rate", [&](const KeyValue& kv) { c.init_learning_rate = parse_double(kv); }},
        {"init_epochs", [&](const KeyValue& kv) { c.init_epochs = as_int(kv); }},
        {"dropout", [&](const KeyValue& kv) { c.dropout = parse_double(kv); }},
        {"learn_x0", [&](const KeyValue& kv) { c.learn_x0 = parse_bool(kv); }},
        {"learn_eps_tilde", [&](const KeyValue& kv) { c.learn_eps_tilde = parse_bool(kv); }},
        {"gamma", [&](const KeyValue& kv) { c.gamma = parse_double(kv); }},
        {"stability", [&](const KeyValue& kv) { c.stability = named(kv, parse_stability); }},
        {"grad_clip", [&](const KeyValue& kv) { c.grad_clip = clip(kv); }},
        {"init_grad_clip", [&](const KeyValue& kv) { c.init_grad_clip = clip(kv); }},
        {"train_loss", [&](const KeyValue& kv) { c.train_loss = named(kv, parse_loss); }},
        {"val_loss", [&](const KeyValue& kv) { c.val_loss = named(kv, parse_loss); }},
        {"normalization", [&](const KeyValue& kv) { c.normalization = named(kv, parse_normalization); }},
        {"optimizer", [&](const KeyValue& kv) { c.optimizer = named(kv, parse_optimizer); }},
        {"eval_x0", [&](const KeyValue& kv) { c.eval_x0 = named(kv, parse_x0_policy); }},
        {"x0_horizon", [&](const KeyValue& kv) { c.x0_horizon = parse_integer(kv); }},
        {"seed", [&](const KeyValue& kv) { c.seed = parse_seed(kv); }},
        {"standardize", [&](const KeyValue& kv) { s.standardize = parse_bool(kv); }},
    };

    for (const KeyValue& kv : entries) {
        const auto it = handlers.find(kv.key);
        if (it == handlers.end()) throw ConfigError("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
        it->second(kv);
    }
    c.validate();
    return s;
}

FitSettings load_fit_settings(const std::filesystem::path& path) { return parse_fit_settings(read_key_values(path)); }

void write_fit_settings(std::ostream& out, const FitSettings& s) {
    const TrainConfig& c = s.train;
    auto clip = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("none"); };
    auto flag = [](bool b) { return b ? "true" : "false"; };
    out << "state_dim = " << c.state_dim << '\n'
        << "max_epochs = " << c.max_epochs << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "learning_rate = " << format_double(c.learning_rate) << '\n'
        << "init_learning_rate = " << format_double(c.init_learning_rate) << '\n'
        << "init_epochs = " << c.init_epochs << '\n'
        << "dropout = " << format_double(c.dropout) << '\n'
        << "learn_x0 = " << flag(c.learn_x0) << '\n'
        << "learn_eps_tilde = " << flag(c.learn_eps_tilde) << '\n'
        << "gamma = " << format_double(c.gamma) << '\n'
        << "stability = " << stability_name(c.stability) << '\n'
        << "grad_clip = " << clip(c.grad_clip) << '\n'
        << "init_grad_clip = " << clip(c.init_grad_clip) << '\n'
        << "train_loss = " << loss_name(c.train_loss) << '\n'
        << "val_loss = " << loss_name(c.val_loss) << '\n'
        << "normalization = " << normalization_name(c.normalization) << '\n'
        << "optimizer = " << optimizer_name(c.optimizer) << '\n'
        << "eval_x0 = " << x0_policy_name(c.eval_x0) << '\n'
        << "x0_horizon = " << c.x0_horizon << '\n'
        << "seed = " << c.seed << '\n'
        << "standardize = " << flag(s.standardize) << '\n';
}

}  // namespace simba
