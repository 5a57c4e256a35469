#include "deepgb/model_io.hpp"

#include "deepgb/error.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace deepgb {

std::string hex_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
    return std::string(buf, r.ptr);
}

double parse_hex_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw IoError("model file: bad hex float '" + s + "'");
    }
    return v;
}

namespace {

/// Series names go through a minimal %-escape so every stored name is a
/// single whitespace-free token.
std::string escape_token(const std::string& s) {
    std::string out;
    for (const unsigned char c : s) {
        if (c <= ' ' || c == '%' || c == 0x7f) {
            char buf[4];
            std::snprintf(buf, sizeof(buf), "%%%02X", c);
            out += buf;
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    return out.empty() ? "%" : out;
}

std::string unescape_token(const std::string& s) {
    if (s == "%") return "";
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            out.push_back(static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

class TokenReader {
public:
    explicit TokenReader(const std::string& text) : in_(text) {}

    std::string next() {
        std::string tok;
        if (!(in_ >> tok)) throw IoError("model file: unexpected end of input");
        return tok;
    }

    void expect(const std::string& keyword) {
        const std::string tok = next();
        if (tok != keyword) {
            throw IoError("model file: expected '" + keyword + "', found '" + tok + "'");
        }
    }

    long integer() {
        const std::string tok = next();
        long v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
            throw IoError("model file: bad integer '" + tok + "'");
        }
        return v;
    }

    double real() { return parse_hex_double(next()); }

private:
    std::istringstream in_;
};

void write_values(std::ostream& out, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        out << (i % 8 == 0 ? (i == 0 ? "" : "\n") : " ") << hex_double(v[i]);
    }
    out << "\n";
}

std::vector<double> read_values(TokenReader& r, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = r.real();
    return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    out << m.rows << " " << m.cols << "\n";
    write_values(out, m.data);
}

Matrix read_matrix(TokenReader& r) {
    const std::size_t rows = static_cast<std::size_t>(r.integer());
    const std::size_t cols = static_cast<std::size_t>(r.integer());
    Matrix m(rows, cols);
    m.data = read_values(r, rows * cols);
    return m;
}

} // namespace

std::string serialize_model(const DeepGbModel& model) {
    std::ostringstream out;
    out << "deepgb-model 1\n";
    out << "series " << escape_token(model.series_name) << "\n";
    out << "scaler " << hex_double(model.scaler.mean) << " " << hex_double(model.scaler.stddev)
        << "\n";
    out << "stopped_early " << (model.stopped_early ? 1 : 0) << "\n";

    out << "features " << model.feature_names.size() << "\n";
    for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
        out << "feature " << escape_token(model.feature_names[i]) << " "
            << model.feature_cardinalities[i] << "\n";
    }

    out << "train_timestamps " << model.train_timestamps.size() << "\n";
    for (std::size_t i = 0; i < model.train_timestamps.size(); ++i) {
        out << (i % 8 == 0 ? (i == 0 ? "" : "\n") : " ") << model.train_timestamps[i];
    }
    if (!model.train_timestamps.empty()) out << "\n";

    const auto& composite = model.composite;
    out << "composite " << composite.tables().size() << " " << composite.layers().size() << " "
        << hex_double(composite.dropout_rate()) << " "
        << (composite.time_encoding() ? composite.time_encoding()->k : 0) << "\n";
    for (const auto& t : composite.tables()) {
        out << "table " << escape_token(t.feature_name) << " " << t.cardinality << " " << t.dim
            << " " << (t.frozen ? 1 : 0) << "\n";
        write_values(out, t.weights.data);
    }
    for (const auto& l : composite.layers()) {
        out << "layer " << (l.activation == Activation::relu ? "relu" : "identity") << "\n";
        write_matrix(out, l.weights);
        write_values(out, l.bias);
    }
    if (composite.time_encoding()) {
        write_values(out, composite.time_encoding()->omega);
        write_values(out, composite.time_encoding()->phi);
    }

    const auto& gbdt = model.residual_model;
    out << "gbdt " << hex_double(gbdt.base) << " " << hex_double(gbdt.learning_rate) << " "
        << gbdt.n_features << " " << gbdt.trees.size() << "\n";
    for (const auto& tree : gbdt.trees) {
        out << "tree " << tree.nodes.size() << "\n";
        for (const auto& n : tree.nodes) {
            out << "node " << n.feature << " " << hex_double(n.threshold) << " "
                << hex_double(n.value) << " " << n.left << " " << n.right << "\n";
        }
    }

    out << "stages " << model.stages.size() << "\n";
    for (const auto& s : model.stages) {
        out << "stage " << s.index << " " << escape_token(s.feature) << " " << hex_double(s.delta)
            << " " << s.prediction.size() << "\n";
        write_values(out, s.prediction);
        write_values(out, s.residual);
    }
    out << "end\n";
    return out.str();
}

DeepGbModel deserialize_model(const std::string& text) {
    TokenReader r(text);
    r.expect("deepgb-model");
    const long version = r.integer();
    if (version != 1) {
        throw IoError("model file: unsupported version " + std::to_string(version));
    }
    DeepGbModel model;
    r.expect("series");
    model.series_name = unescape_token(r.next());
    r.expect("scaler");
    model.scaler.mean = r.real();
    model.scaler.stddev = r.real();
    r.expect("stopped_early");
    model.stopped_early = r.integer() != 0;

    r.expect("features");
    const long n_features = r.integer();
    for (long i = 0; i < n_features; ++i) {
        r.expect("feature");
        model.feature_names.push_back(unescape_token(r.next()));
        model.feature_cardinalities.push_back(static_cast<int>(r.integer()));
    }

    r.expect("train_timestamps");
    const long n_ts = r.integer();
    model.train_timestamps.resize(static_cast<std::size_t>(n_ts));
    for (auto& t : model.train_timestamps) t = r.integer();

    r.expect("composite");
    const long n_tables = r.integer();
    const long n_layers = r.integer();
    const double dropout = r.real();
    const long t2v_k = r.integer();

    std::vector<EmbeddingTable> tables;
    for (long i = 0; i < n_tables; ++i) {
        r.expect("table");
        EmbeddingTable t;
        t.feature_name = unescape_token(r.next());
        t.cardinality = static_cast<int>(r.integer());
        t.dim = static_cast<int>(r.integer());
        t.frozen = r.integer() != 0;
        t.weights = Matrix(static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(t.dim));
        t.weights.data = read_values(r, t.weights.size());
        tables.push_back(std::move(t));
    }
    // rebuild with an empty head, then replace the layers read from disk
    CompositeEmbeddingModel composite(std::move(tables), {}, dropout,
                                      t2v_k > 0 ? std::optional<int>(static_cast<int>(t2v_k))
                                                : std::nullopt);
    composite.layers().clear();
    for (long i = 0; i < n_layers; ++i) {
        r.expect("layer");
        const std::string act = r.next();
        DenseLayer layer;
        layer.activation = act == "relu" ? Activation::relu : Activation::identity;
        layer.weights = read_matrix(r);
        layer.bias = read_values(r, layer.weights.rows);
        composite.layers().push_back(std::move(layer));
    }
    if (t2v_k > 0) {
        composite.time_encoding()->omega = read_values(r, static_cast<std::size_t>(t2v_k));
        composite.time_encoding()->phi = read_values(r, static_cast<std::size_t>(t2v_k));
    }
    model.composite = std::move(composite);

    r.expect("gbdt");
    model.residual_model.base = r.real();
    model.residual_model.learning_rate = r.real();
    model.residual_model.n_features = static_cast<std::size_t>(r.integer());
    const long n_trees = r.integer();
    for (long i = 0; i < n_trees; ++i) {
        r.expect("tree");
        const long n_nodes = r.integer();
        RegressionTree tree;
        tree.nodes.reserve(static_cast<std::size_t>(n_nodes));
        for (long k = 0; k < n_nodes; ++k) {
            r.expect("node");
            TreeNode n;
            n.feature = static_cast<int>(r.integer());
            n.threshold = r.real();
            n.value = r.real();
            n.left = static_cast<int>(r.integer());
            n.right = static_cast<int>(r.integer());
            tree.nodes.push_back(n);
        }
        model.residual_model.trees.push_back(std::move(tree));
    }

    r.expect("stages");
    const long n_stages = r.integer();
    for (long i = 0; i < n_stages; ++i) {
        r.expect("stage");
        StageRecord s;
        s.index = static_cast<int>(r.integer());
        s.feature = unescape_token(r.next());
        s.delta = r.real();
        const std::size_t len = static_cast<std::size_t>(r.integer());
        s.prediction = read_values(r, len);
        s.residual = read_values(r, len);
        model.stages.push_back(std::move(s));
    }
    r.expect("end");
    return model;
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

void save_model(const DeepGbModel& model, const std::string& path) {
    atomic_write(path, serialize_model(model));
}

DeepGbModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

} // namespace deepgb
