from .argutils import field_prepend, as_list, as_unit_vector
