# Demo: Configurations where pointwise tracking is out of reach.
#
# With one control at x = L and two observation points, an adjoint glued from
# source-free solutions between the points has a vanishing flux at x = L while
# its forcing does not vanish. On refined meshes the observed flux of the
# discrete adjoint goes to zero and the forcing norm stays put.
from tracking_control.experiments import obstruction_refinement


for variant in ('one-control', 'two-controls'):
    frame = obstruction_refinement(variant, levels=4, elements=20, steps=100)
    print(variant)
    print(frame.to_string(index=False, float_format=lambda v: f'{v:.4e}'))
    print()
