"""Myerson's optimal mechanism and VCG under misspecified (green/red) bidders."""
