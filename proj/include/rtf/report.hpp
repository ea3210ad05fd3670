#pragma once

#include "rtf/assembly.hpp"
#include "rtf/config.hpp"

#include <string>
#include <vector>

namespace rtf {

struct RunReport {
    RunConfig config;
    std::vector<FunctionVerdict> functions;
    LemmaCertification lemma;
    bool all_ok() const
    {
        if (!lemma.ok()) return false;
        for (const auto& f : functions)
            if (!f.all_ok()) return false;
        return !functions.empty();
    }
    std::string first_failure() const;
};

std::string report_to_json(const RunReport& report);
std::string report_summary(const RunReport& report); // human readable

} // namespace rtf
