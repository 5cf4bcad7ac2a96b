#include <cstdio>
#include <sstream>
#include <string>

#include "ntnpred/checkpoint.hpp"
#include "ntnpred/errors.hpp"
#include "ntnpred/harness.hpp"

namespace ntnpred {

namespace {

std::uint64_t product(const Shape& s) {
    std::uint64_t p = 1;
    for (auto v : s) p *= v;
    return p;
}

// (Lf, Lt, C) for convolutions, (Lt, N) for the LSTM.
void check_rank(const LayerSpec& s, const Shape& in) {
    const std::size_t want = s.kind == LayerKind::LSTM ? 2 : 3;
    if (in.size() != want)
        throw ConfigError("layer '" + s.name + "': input shape " + shape_str(in) + " must have rank " +
                          std::to_string(want));
}

LayerComplexity analyse(const LayerSpec& s, const Shape& in) {
    LayerComplexity lc{s.name, s.kind, in, in, 0, 0};
    switch (s.kind) {
        case LayerKind::Conv2D: {
            check_rank(s, in);
            s.validate();
            lc.output = conv2d_output_shape(in, s);
            const std::uint64_t k = s.kernel.freq * s.kernel.time;
            lc.multiplications = product(lc.output) * k * in[2];
            lc.parameters = s.filters_or_units * (in[2] * k + 1);
            break;
        }
        case LayerKind::TConv2D: {
            check_rank(s, in);
            s.validate();
            lc.output = tconv2d_output_shape(in, s);
            const std::uint64_t k = s.kernel.freq * s.kernel.time;
            lc.multiplications = product(in) * k * s.filters_or_units;
            lc.parameters = s.filters_or_units * (in[2] * k + 1);
            break;
        }
        case LayerKind::LSTM: {
            check_rank(s, in);
            s.validate();
            const std::uint64_t u = s.filters_or_units;
            lc.output = {1, in[0], s.filters_or_units};
            lc.multiplications = in[0] * u * (4 * in[1] + 4 * u + 3);
            lc.parameters = lstm_param_count(in[1], s.filters_or_units);
            break;
        }
        default: break;
    }
    return lc;
}

}  // namespace

ComplexityReport complexity_report(const std::vector<LayerSpec>& arch, const std::vector<Shape>& input_shapes) {
    if (arch.size() != input_shapes.size())
        throw ConfigError("complexity: " + std::to_string(arch.size()) + " layers but " +
                          std::to_string(input_shapes.size()) + " input shapes");
    ComplexityReport r;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        r.layers.push_back(analyse(arch[i], input_shapes[i]));
        r.total_multiplications += r.layers.back().multiplications;
        r.trainable_params += r.layers.back().parameters;
    }
    return r;
}

std::vector<Shape> default_layer_inputs() {
    return {{48, 14, 2}, {48, 14, 2}, {4, 14, 8}, {14, 32}, {1, 14, 16}, {4, 14, 8}, {48, 14, 2}};
}

ComplexityReport complexity_report(const PredictorModel& model) {
    return complexity_report(model.architecture(), default_layer_inputs());
}

nlohmann::json ComplexityReport::to_json() const {
    nlohmann::json layers_j = nlohmann::json::array();
    for (const auto& l : layers)
        layers_j.push_back({{"name", l.name},
                            {"kind", std::string(to_string(l.kind))},
                            {"input_shape", l.input},
                            {"output_shape", l.output},
                            {"multiplications", l.multiplications},
                            {"parameters", l.parameters}});
    return {{"layers", layers_j},
            {"total_multiplications", total_multiplications},
            {"trainable_params", trainable_params}};
}

ComplexityReport ComplexityReport::from_json(const nlohmann::json& j) {
    ComplexityReport r;
    try {
        for (const auto& l : j.at("layers"))
            r.layers.push_back({l.at("name").get<std::string>(), layer_kind_from_string(l.at("kind").get<std::string>()),
                                l.at("input_shape").get<Shape>(), l.at("output_shape").get<Shape>(),
                                l.at("multiplications").get<std::uint64_t>(), l.at("parameters").get<std::uint64_t>()});
        r.total_multiplications = j.at("total_multiplications").get<std::uint64_t>();
        r.trainable_params = j.at("trainable_params").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("complexity report: ") + e.what());
    }
    return r;
}

std::string ComplexityReport::table() const {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-8s %-14s %-14s %12s %10s\n", "layer", "kind", "input", "output",
                  "mults", "params");
    os << line;
    for (const auto& l : layers) {
        std::snprintf(line, sizeof line, "%-12s %-8s %-14s %-14s %12llu %10llu\n", l.name.c_str(),
                      std::string(to_string(l.kind)).c_str(), shape_str(l.input).c_str(), shape_str(l.output).c_str(),
                      static_cast<unsigned long long>(l.multiplications),
                      static_cast<unsigned long long>(l.parameters));
        os << line;
    }
    std::snprintf(line, sizeof line, "%-50s %12llu %10llu\n", "total",
                  static_cast<unsigned long long>(total_multiplications),
                  static_cast<unsigned long long>(trainable_params));
    os << line;
    return os.str();
}

std::pair<std::vector<LayerSpec>, std::vector<Shape>> architecture_from_json(const nlohmann::json& j) {
    std::vector<LayerSpec> arch;
    std::vector<Shape> shapes;
    try {
        Shape current = j.at("input_shape").get<Shape>();
        const auto& layers = j.at("layers");
        if (!layers.is_array() || layers.empty()) throw ConfigError("architecture: 'layers' must be a non-empty array");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& lj = layers[i];
            LayerSpec s = layer_spec_from_json(lj);
            Shape in = lj.contains("input_shape") ? lj.at("input_shape").get<Shape>() : current;
            if (!lj.contains("input_shape") && s.kind == LayerKind::LSTM && in.size() == 3) in = {in[1], in[0] * in[2]};
            current = analyse(s, in).output;
            arch.push_back(std::move(s));
            shapes.push_back(std::move(in));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("architecture: ") + e.what());
    }
    return {std::move(arch), std::move(shapes)};
}

}  // namespace ntnpred
