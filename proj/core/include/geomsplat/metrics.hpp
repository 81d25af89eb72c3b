#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

namespace geomsplat {

// JSON-lines metrics stream. Records carry only deterministic content so two
// seeded runs produce byte-identical files; wall-clock timings go to a
// separate timing log.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& path);
    void write(const nlohmann::ordered_json& record);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace geomsplat
