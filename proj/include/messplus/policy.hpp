#pragma once

#include <memory>
#include <string>

#include "messplus/core.hpp"
#include "messplus/router.hpp"

namespace messplus {

/// Anything that can serve a labelled request stream one request at a time.
/// The returned decision carries the incurred cost and the realized
/// satisfaction of the output handed back to the user.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual RoutingDecision decide(const RequestEvent& event) = 0;
};

class MessPlusPolicy final : public Policy {
public:
    explicit MessPlusPolicy(RouterConfig config) : router_(std::move(config)) {}

    std::string name() const override { return "messplus"; }
    RoutingDecision decide(const RequestEvent& event) override { return router_.step(event, labels_); }

    const Router& router() const noexcept { return router_; }

private:
    Router router_;
    EventLabels labels_;
};

}  // namespace messplus
