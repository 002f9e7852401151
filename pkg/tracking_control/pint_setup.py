import pint

UNITS = pint.UnitRegistry()
Quantity = UNITS.Quantity
Unit = pint.Unit

pint.set_application_registry(UNITS)


def magnitude(value: float | str | Quantity, units: str | None = None) -> float:
    """Returns the plain magnitude of `value`.

    `value` can be a float (taken as already nondimensional or already in the
    requested units), a `Quantity`, or a string that pint can parse, e.g.
    `'0.5 s'`. If `units` is given, quantities are converted to these units
    first; otherwise their own magnitude is returned.
    """
    if isinstance(value, str):
        value = Quantity(value)
    if isinstance(value, Quantity):
        if units is not None:
            value = value.to(units)
        return float(value.magnitude)
    return float(value)


def unit_label(value: float | str | Quantity) -> str:
    """Returns the units of `value` as a short string ('' if unitless)."""
    if isinstance(value, str):
        value = Quantity(value)
    if isinstance(value, Quantity) and not value.dimensionless:
        return f"{value.units:~P}"
    return ''
