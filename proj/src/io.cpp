#include "maxconv/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace maxconv::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',' || c == ' ' || c == '\t' || c == ';') {
            if (!cur.empty()) fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) fields.push_back(std::move(cur));
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

}  // namespace

Tensor read_tensor_csv(const std::string& path, bool shape_header) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::size_t> shape;
    if (shape_header) {
        while (std::getline(in, line)) {
            ++line_no;
            auto fields = split_fields(line);
            if (fields.empty()) continue;
            for (const auto& f : fields) {
                double v = 0.0;
                if (!parse_double(f, v) || v < 1.0 || v != static_cast<std::size_t>(v)) {
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": bad shape extent '" + f + "'");
                }
                shape.push_back(static_cast<std::size_t>(v));
            }
            break;
        }
        if (shape.empty()) {
            throw std::runtime_error(path + ": missing shape header");
        }
    }
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        for (const auto& f : split_fields(line)) {
            double v = 0.0;
            if (!parse_double(f, v)) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": not a number: '" + f + "'");
            }
            values.push_back(v);
        }
    }
    if (values.empty()) throw std::runtime_error(path + ": no values");
    if (!shape_header) shape = {values.size()};
    try {
        return Tensor(std::move(shape), std::move(values));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::vector<double> read_series_csv(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> values;
    bool first_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        double v = 0.0;
        if (!parse_double(fields.back(), v)) {
            if (first_row) {  // header row
                first_row = false;
                continue;
            }
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": not a number: '" + fields.back() + "'");
        }
        first_row = false;
        values.push_back(v);
    }
    if (values.empty()) throw std::runtime_error(path + ": no values");
    return values;
}

void write_lines(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace maxconv::io
