@problemName Bad
@seriesLength 3
@classLabel true a b
@data
1,2,3:c
