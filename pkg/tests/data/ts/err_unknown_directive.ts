@problemName Bad
@seriesLength 3
@classLabel true a
@frequency 12
@data
1,2,3:a
