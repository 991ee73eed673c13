"""Virtual-to-physical mapping: one-to-one, one-to-many (pooled dispatch),
and many-to-one (cross-site shared object with grasp authority).

The engine owns the binding table and decides which layer is authoritative
for each pose: a held object follows the hand, an engaged proxy drives its
virtual twin, and during reassignment the virtual layer holds steady so
the user never sees a jump.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from proxysim.core import (
    ARRIVAL_EPS_M,
    Pose2D,
    RobotProxy,
    TrackedFrame,
    VirtualObject,
    distance,
)

FOCUS_HYSTERESIS_M = 0.05

BINDING_KINDS = ("one-to-one", "one-to-many", "many-to-one")


class BindingError(ValueError):
    """A bind request violates exclusivity or kind invariants."""


class UnserviceableDispatch(RuntimeError):
    """No idle proxy is available at the requested site."""

    def __init__(self, binding_id: str, site: str):
        super().__init__(f"binding {binding_id}: no idle proxy at site {site}")
        self.binding_id = binding_id
        self.site = site


@dataclass(frozen=True)
class MotionOrder:
    """A mapping-level movement request; the scenario layer turns it into a
    motion plan. ``kind`` is dispatch | converge | mirror."""

    proxy_id: str
    goal: Pose2D
    kind: str
    deadline: Optional[float] = None


@dataclass
class MappingBinding:
    id: str
    kind: str
    virtual_ids: Tuple[str, ...]
    proxy_sites: Dict[str, str]  # proxy id -> site id
    active: Dict[str, str] = field(default_factory=dict)  # site -> active proxy
    target: Dict[str, str] = field(default_factory=dict)  # site -> dispatched virtual
    authority_site: Optional[str] = None  # many-to-one: site whose user holds it
    authority_since: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in BINDING_KINDS:
            raise BindingError(f"unknown binding kind {self.kind!r}")
        if not self.virtual_ids or not self.proxy_sites:
            raise BindingError("binding needs at least one virtual and one proxy id")
        if self.kind == "one-to-one":
            if len(self.virtual_ids) != 1 or len(self.proxy_sites) != 1:
                raise BindingError("one-to-one binds exactly one virtual and one proxy")
        if self.kind == "many-to-one":
            if len(self.virtual_ids) != 1:
                raise BindingError("many-to-one binds exactly one virtual object")
            sites = list(self.proxy_sites.values())
            if len(self.proxy_sites) < 2 or len(set(sites)) != len(sites):
                raise BindingError("many-to-one needs >= 2 proxies at distinct sites")

    @property
    def proxy_ids(self) -> Tuple[str, ...]:
        return tuple(sorted(self.proxy_sites))

    def proxies_at(self, site: str) -> List[str]:
        return sorted(p for p, s in self.proxy_sites.items() if s == site)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "virtual_ids": sorted(self.virtual_ids),
            "proxy_sites": dict(sorted(self.proxy_sites.items())),
            "active": dict(sorted(self.active.items())),
            "authority_site": self.authority_site,
        }


def hand_focus(
    objects: Mapping[str, VirtualObject],
    hand: TrackedFrame,
    previous: Optional[str] = None,
    hysteresis: float = FOCUS_HYSTERESIS_M,
) -> str:
    """Object nearest the hand, with stickiness: a challenger must beat the
    current focus by ``hysteresis`` to steal it."""
    if not objects:
        raise ValueError("hand_focus requires at least one object")
    ranked = sorted(
        objects.values(), key=lambda o: (distance(o.pose, hand.pose), o.id)
    )
    best = ranked[0]
    if previous is not None and previous in objects and best.id != previous:
        incumbent = distance(objects[previous].pose, hand.pose)
        if distance(best.pose, hand.pose) > incumbent - hysteresis:
            return previous
    return best.id


class MappingEngine:
    """Binding table plus the per-tick authority/mirroring pass."""

    def __init__(
        self,
        engage_eps: float = ARRIVAL_EPS_M,
        hysteresis: float = FOCUS_HYSTERESIS_M,
    ):
        self.engage_eps = engage_eps
        self.hysteresis = hysteresis
        self.bindings: Dict[str, MappingBinding] = {}
        self._virtual_owner: Dict[str, str] = {}  # virtual id -> binding id
        self._proxy_owner: Dict[str, str] = {}  # proxy id -> binding id
        self._focus: Dict[str, str] = {}  # hand subject -> focused virtual id
        self._counter = 0

    # -- binding construction -------------------------------------------------

    def _claim(self, binding: MappingBinding) -> MappingBinding:
        for v in binding.virtual_ids:
            if v in self._virtual_owner:
                raise BindingError(f"virtual {v!r} already bound")
        for p in binding.proxy_sites:
            if p in self._proxy_owner:
                raise BindingError(f"proxy {p!r} already bound")
        for v in binding.virtual_ids:
            self._virtual_owner[v] = binding.id
        for p in binding.proxy_sites:
            self._proxy_owner[p] = binding.id
        self.bindings[binding.id] = binding
        return binding

    def _next_id(self, kind: str) -> str:
        self._counter += 1
        return f"{kind}-{self._counter}"

    def bind_one_to_one(
        self, virtual_id: str, proxy_id: str, site: str
    ) -> MappingBinding:
        binding = MappingBinding(
            id=self._next_id("one-to-one"),
            kind="one-to-one",
            virtual_ids=(virtual_id,),
            proxy_sites={proxy_id: site},
        )
        binding.active[site] = proxy_id
        binding.target[site] = virtual_id
        return self._claim(binding)

    def bind_one_to_many(
        self, virtual_ids: Iterable[str], proxy_sites: Mapping[str, str]
    ) -> MappingBinding:
        binding = MappingBinding(
            id=self._next_id("one-to-many"),
            kind="one-to-many",
            virtual_ids=tuple(sorted(virtual_ids)),
            proxy_sites=dict(proxy_sites),
        )
        return self._claim(binding)

    def bind_many_to_one(
        self, virtual_id: str, proxy_sites: Mapping[str, str]
    ) -> MappingBinding:
        binding = MappingBinding(
            id=self._next_id("many-to-one"),
            kind="many-to-one",
            virtual_ids=(virtual_id,),
            proxy_sites=dict(proxy_sites),
        )
        for proxy_id, site in binding.proxy_sites.items():
            binding.active[site] = proxy_id
        return self._claim(binding)

    def unbind(self, binding_id: str) -> None:
        binding = self.bindings.pop(binding_id)
        for v in binding.virtual_ids:
            self._virtual_owner.pop(v, None)
        for p in binding.proxy_sites:
            self._proxy_owner.pop(p, None)

    def binding_of_virtual(self, virtual_id: str) -> Optional[MappingBinding]:
        bid = self._virtual_owner.get(virtual_id)
        return self.bindings[bid] if bid else None

    def binding_of_proxy(self, proxy_id: str) -> Optional[MappingBinding]:
        bid = self._proxy_owner.get(proxy_id)
        return self.bindings[bid] if bid else None

    # -- one-to-many dispatch --------------------------------------------------

    def dispatch_nearest(
        self,
        binding: MappingBinding,
        focus: Pose2D,
        site: str,
        proxies: Mapping[str, RobotProxy],
        virtual_id: Optional[str] = None,
    ) -> str:
        """Pick the idle pool proxy nearest ``focus`` at the site; ties break
        on smallest proxy id. The previous active proxy returns to idle."""
        if binding.kind != "one-to-many":
            raise BindingError("dispatch_nearest applies to one-to-many bindings")
        current = binding.active.get(site)
        pool = [
            proxies[p]
            for p in binding.proxies_at(site)
            if p == current or proxies[p].state == "idle"
        ]
        if not pool:
            raise UnserviceableDispatch(binding.id, site)
        chosen = min(pool, key=lambda p: (distance(p.pose, focus), p.id))
        if current is not None and current != chosen.id:
            proxies[current].state = "idle"
        binding.active[site] = chosen.id
        if virtual_id is not None:
            binding.target[site] = virtual_id
        return chosen.id

    # -- focus -------------------------------------------------------------

    def update_focus(
        self, hand_id: str, objects: Mapping[str, VirtualObject], hand: TrackedFrame
    ) -> str:
        focus = hand_focus(
            objects, hand, previous=self._focus.get(hand_id), hysteresis=self.hysteresis
        )
        self._focus[hand_id] = focus
        return focus

    def focused(self, hand_id: str) -> Optional[str]:
        return self._focus.get(hand_id)

    # -- many-to-one authority --------------------------------------------------

    def grasp_shared(self, virtual_id: str, site: str, timestamp: int) -> str:
        """Request grasp authority. Earliest timestamp wins; ties break on
        smallest site id. Returns the authoritative site after resolution."""
        binding = self._require_shared(virtual_id)
        if binding.authority_site is None or (
            timestamp,
            site,
        ) < (binding.authority_since, binding.authority_site):
            binding.authority_site = site
            binding.authority_since = timestamp
        return binding.authority_site

    def release_shared(self, virtual_id: str, site: str) -> None:
        binding = self._require_shared(virtual_id)
        if binding.authority_site == site:
            binding.authority_site = None
            binding.authority_since = None

    def _require_shared(self, virtual_id: str) -> MappingBinding:
        binding = self.binding_of_virtual(virtual_id)
        if binding is None or binding.kind != "many-to-one":
            raise BindingError(f"virtual {virtual_id!r} has no many-to-one binding")
        return binding

    # -- per-tick authority pass ---------------------------------------------

    def refresh(
        self,
        objects: Mapping[str, VirtualObject],
        proxies: Mapping[str, RobotProxy],
    ) -> List[MotionOrder]:
        """Apply mirroring and engagement transitions; emit movement orders
        for proxies that must chase a pose (many-to-one convergence)."""
        orders: List[MotionOrder] = []
        for bid in sorted(self.bindings):
            binding = self.bindings[bid]
            if binding.kind == "many-to-one":
                orders.extend(self._refresh_shared(binding, objects, proxies))
            else:
                self._refresh_mirrored(binding, objects, proxies)
        return orders

    def _refresh_mirrored(self, binding, objects, proxies) -> None:
        # One-to-one and one-to-many: per site, the active proxy and its
        # dispatched object mirror whichever side currently has authority.
        for site, proxy_id in sorted(binding.active.items()):
            virtual_id = binding.target.get(site)
            if virtual_id is None or virtual_id not in objects:
                continue
            obj = objects[virtual_id]
            proxy = proxies[proxy_id]
            if obj.held_by is not None:
                continue  # hand is authority; retargeting chases it
            if proxy.carried:
                obj.pose = proxy.pose
                continue
            if distance(proxy.pose, obj.pose) <= self.engage_eps:
                if proxy.state != "engaged":
                    proxy.state = "engaged"
                obj.pose = proxy.pose
            elif proxy.state == "engaged":
                # proxy left the object (re-dispatch); virtual layer holds
                proxy.state = "repositioning"

    def _refresh_shared(self, binding, objects, proxies) -> List[MotionOrder]:
        virtual_id = binding.virtual_ids[0]
        if virtual_id not in objects:
            return []
        obj = objects[virtual_id]
        orders: List[MotionOrder] = []
        if binding.authority_site is not None:
            leader = binding.active.get(binding.authority_site)
            if leader is not None:
                obj.pose = proxies[leader].pose
        for site, proxy_id in sorted(binding.active.items()):
            if site == binding.authority_site:
                continue
            proxy = proxies[proxy_id]
            if proxy.carried:
                continue
            if distance(proxy.pose, obj.pose) > self.engage_eps:
                orders.append(
                    MotionOrder(proxy_id=proxy_id, goal=obj.pose, kind="converge")
                )
            elif proxy.state != "engaged":
                proxy.state = "engaged"
        return orders

    # -- observation -------------------------------------------------------

    def snapshot(self) -> dict:
        return {bid: b.as_dict() for bid, b in sorted(self.bindings.items())}
