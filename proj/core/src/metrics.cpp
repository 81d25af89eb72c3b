#include "geomsplat/metrics.hpp"

#include "geomsplat/errors.hpp"

namespace geomsplat {

MetricsWriter::MetricsWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open metrics stream: " + path);
}

void MetricsWriter::write(const nlohmann::ordered_json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("metrics stream write failed: " + path_);
}

}  // namespace geomsplat
