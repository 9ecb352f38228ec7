#include "emogait/emotion.hpp"

#include <cstdlib>
#include <sstream>

namespace emogait {

EmotionVector parse_emotion(const std::string& text) {
    std::vector<double> components;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str()) {
            throw ValidationError("emotion vector: cannot parse component '" + item + "'");
        }
        components.push_back(v);
    }
    if (components.empty()) throw ValidationError("emotion vector: empty");
    EmotionVector e(std::move(components));
    e.normalize();
    return e;
}

} // namespace emogait
