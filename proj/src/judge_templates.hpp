#pragma once

#include <string_view>

namespace argos::evalkit::detail {

extern const std::string_view kFsrAuditTemplate;
extern const std::string_view kScenarioJudgeTemplate;

}  // namespace argos::evalkit::detail
