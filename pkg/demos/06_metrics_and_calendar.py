"""
Calendar classes and error metrics
==================================

Days are classified by type (Monday, midweek, Friday, Saturday, Sunday
variants) and by month segment. MAPE and RMSE are computed per day curve.
"""
import datetime as dt

from hybridload import classify_day, mape, rmse

for d in (dt.date(2009, 4, 2), dt.date(2009, 6, 7), dt.date(2009, 8, 2), dt.date(2009, 12, 6)):
    c = classify_day(d)
    print(d, d.strftime("%A"), "-> type", c.day_type, "segment", c.segment)

print("mape:", mape([110, 95], [100, 100]))
print("rmse:", rmse([103, 99], [100, 100]))
