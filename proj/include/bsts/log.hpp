#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace bsts {

inline std::function<void(const std::string&)>& warning_handler() {
    static std::function<void(const std::string&)> handler =
        [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
    return handler;
}

inline void warn(const std::string& msg) {
    if (warning_handler()) warning_handler()(msg);
}

}  // namespace bsts
