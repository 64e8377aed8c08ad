#include "simba/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>

#include "simba/config.hpp"
#include "simba/csv.hpp"
#include "simba/errors.hpp"

namespace simba {

namespace {

constexpr const char* kStateSpaceFormat = "simba-ss 1";
constexpr const char* kArxFormat = "simba-arx 1";

// Keyed view over a model file with "must exist" lookups.
class Fields {
   public:
    explicit Fields(std::istream& in) {
        for (KeyValue& kv : read_key_values(in)) {
            if (map_.count(kv.key)) throw ParseError("line " + std::to_string(kv.line) + ": duplicate key " + kv.key, kv.line);
            map_.emplace(kv.key, std::move(kv));
        }
    }

    const KeyValue& get(const std::string& key) const {
        const auto it = map_.find(key);
        if (it == map_.end()) throw ConfigError("model file: missing key '" + key + "'");
        return it->second;
    }
    bool has(const std::string& key) const { return map_.count(key) > 0; }

    Index dim(const std::string& key) const {
        const long long v = parse_integer(get(key));
        if (v < 0) throw ConfigError("model file: " + key + " must be non-negative");
        return static_cast<Index>(v);
    }

    void expect_format(const char* format) const {
        if (get("format").value != format) {
            throw ConfigError("model file: format '" + get("format").value + "', expected '" + format + "'");
        }
    }

    const std::map<std::string, KeyValue>& all() const { return map_; }

   private:
    std::map<std::string, KeyValue> map_;
};

Vector sized_vector(const KeyValue& kv, Index size) {
    Vector v = parse_vector(kv);
    if (v.size() != size) {
        throw ConfigError("model file: " + kv.key + " has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(size));
    }
    return v;
}

}  // namespace

void write_model(std::ostream& out, const StateSpaceModel& model) {
    model.validate();
    out << "format = " << kStateSpaceFormat << '\n'
        << "n = " << model.n() << '\n'
        << "m = " << model.m() << '\n'
        << "p = " << model.p() << '\n'
        << "stability = " << stability_name(model.stability) << '\n'
        << "gamma = " << format_double(model.gamma) << '\n'
        << "A = " << format_matrix(model.A) << '\n'
        << "B = " << format_matrix(model.B) << '\n'
        << "C = " << format_matrix(model.C) << '\n'
        << "D = " << format_matrix(model.D) << '\n';
    if (model.params) {
        out << "W = " << format_matrix(model.params->W) << '\n'
            << "V = " << format_matrix(model.params->V) << '\n'
            << "eps_tilde = " << format_double(model.params->eps_tilde) << '\n';
    }
    for (const auto& [id, x0] : model.x0_table) out << "x0." << id << " = " << format_vector(x0) << '\n';
    if (model.scaler) {
        out << "u_mean = " << format_vector(model.scaler->u_mean) << '\n'
            << "u_std = " << format_vector(model.scaler->u_std) << '\n'
            << "y_mean = " << format_vector(model.scaler->y_mean) << '\n'
            << "y_std = " << format_vector(model.scaler->y_std) << '\n';
    }
}

void save_model(const std::filesystem::path& path, const StateSpaceModel& model) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_model(out, model);
}

StateSpaceModel read_model(std::istream& in) {
    const Fields f(in);
    f.expect_format(kStateSpaceFormat);
    const Index n = f.dim("n"), m = f.dim("m"), p = f.dim("p");
    StateSpaceModel model;
    try {
        model.stability = parse_stability(f.get("stability").value);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("model file: ") + e.what());
    }
    model.gamma = parse_double(f.get("gamma"));
    model.A = parse_matrix(f.get("A"), n, n);
    model.B = parse_matrix(f.get("B"), n, m);
    model.C = parse_matrix(f.get("C"), p, n);
    model.D = parse_matrix(f.get("D"), p, m);

    static const char* scaler_keys[] = {"u_mean", "u_std", "y_mean", "y_std"};
    int scaler_count = 0;
    for (const char* k : scaler_keys) scaler_count += f.has(k) ? 1 : 0;
    if (scaler_count != 0 && scaler_count != 4) throw ConfigError("model file: incomplete scaler");
    if (scaler_count == 4) {
        Scaler s;
        s.u_mean = sized_vector(f.get("u_mean"), m);
        s.u_std = sized_vector(f.get("u_std"), m);
        s.y_mean = sized_vector(f.get("y_mean"), p);
        s.y_std = sized_vector(f.get("y_std"), p);
        model.scaler = s;
    }

    if (f.has("W") || f.has("V") || f.has("eps_tilde")) {
        if (model.stability != StabilityMode::schur) throw ConfigError("model file: W/V/eps_tilde need stability = schur");
        SchurParams sp;
        sp.W = parse_matrix(f.get("W"), 2 * n, 2 * n);
        sp.V = parse_matrix(f.get("V"), n, n);
        sp.eps_tilde = parse_double(f.get("eps_tilde"));
        sp.gamma = model.gamma;
        const Matrix rebuilt = build_A(sp);
        if ((rebuilt - model.A).norm() > 1e-9 * (1.0 + model.A.norm())) {
            throw ConfigError("model file: A does not match the stored W, V, eps_tilde");
        }
        model.params = std::move(sp);
    }

    static const char* known[] = {"format", "n", "m", "p", "stability", "gamma", "A", "B", "C", "D",
                                  "W", "V", "eps_tilde", "u_mean", "u_std", "y_mean", "y_std"};
    for (const auto& [key, kv] : f.all()) {
        if (key.rfind("x0.", 0) == 0 && key.size() > 3) {
            model.x0_table[key.substr(3)] = sized_vector(kv, n);
            continue;
        }
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw ConfigError("model file: line " + std::to_string(kv.line) + ": unknown key '" + key + "'");
        }
    }
    try {
        model.validate();
    } catch (const DimensionError& e) {
        throw ConfigError(std::string("model file: ") + e.what());
    } catch (const ContractError& e) {
        throw ConfigError(std::string("model file: ") + e.what());
    }
    return model;
}

StateSpaceModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    return read_model(in);
}

void write_arx(std::ostream& out, const ArxModel& model) {
    model.validate();
    out << "format = " << kArxFormat << '\n'
        << "na = " << model.na << '\n'
        << "nb = " << model.nb << '\n'
        << "p = " << model.p() << '\n'
        << "m = " << model.m() << '\n'
        << "feedthrough = " << (model.b0 ? "true" : "false") << '\n';
    for (int i = 0; i < model.na; ++i) out << 'a' << i + 1 << " = " << format_matrix(model.a[static_cast<std::size_t>(i)]) << '\n';
    for (int j = 0; j < model.nb; ++j) out << 'b' << j + 1 << " = " << format_matrix(model.b[static_cast<std::size_t>(j)]) << '\n';
    if (model.b0) out << "b0 = " << format_matrix(*model.b0) << '\n';
}

ArxModel read_arx(std::istream& in) {
    const Fields f(in);
    f.expect_format(kArxFormat);
    ArxModel model;
    model.na = static_cast<int>(f.dim("na"));
    model.nb = static_cast<int>(f.dim("nb"));
    const Index p = f.dim("p"), m = f.dim("m");
    for (int i = 1; i <= model.na; ++i) model.a.push_back(parse_matrix(f.get("a" + std::to_string(i)), p, p));
    for (int j = 1; j <= model.nb; ++j) model.b.push_back(parse_matrix(f.get("b" + std::to_string(j)), p, m));
    if (parse_bool(f.get("feedthrough"))) model.b0 = parse_matrix(f.get("b0"), p, m);
    model.validate();
    return model;
}

}  // namespace simba
